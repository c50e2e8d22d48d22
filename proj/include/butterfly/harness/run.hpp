#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "butterfly/core/bfm.hpp"
#include "butterfly/core/png.hpp"
#include "butterfly/harness/config.hpp"
#include "butterfly/harness/render.hpp"
#include "butterfly/nsga2/evolve.hpp"
#include "butterfly/objectives.hpp"

namespace butterfly {

/// Shortest decimal text that parses back to exactly `v`.
[[nodiscard]] inline auto format_double(double v) -> std::string
{
    char buf[64];
    auto const res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

[[nodiscard]] inline auto artifact_stem(std::size_t generation, std::uint64_t id) -> std::string
{
    return "gen" + std::to_string(generation) + "_ind" + std::to_string(id);
}

/// Best member of the front for each objective (intensity, degrad, dist),
/// deduplicated, at most `cap` entries. Ties go to the lower id.
[[nodiscard]] inline auto extreme_members(const GenerationFront& front, std::size_t cap) -> std::vector<const ArchiveEntry*>
{
    std::vector<const ArchiveEntry*> out;
    for (std::size_t m = 0; m < kObjectiveCount && out.size() < cap; ++m) {
        const ArchiveEntry* best = nullptr;
        for (const auto& e : front.members) {
            if (best == nullptr || e.objectives.as_array()[m] < best->objectives.as_array()[m]) {
                best = &e;
            }
        }
        if (best != nullptr && std::find(out.begin(), out.end(), best) == out.end()) {
            out.push_back(best);
        }
    }
    return out;
}

/// Writes one archived generation as CSV rows:
/// generation,individual_id,intensity,degrad,dist (dist un-negated).
inline void write_pareto_rows(std::ostream& os, const GenerationFront& front)
{
    for (const auto& e : front.members) {
        os << front.generation << ',' << e.id << ',' << format_double(e.objectives.intensity) << ','
           << format_double(e.objectives.degrad) << ',' << format_double(e.objectives.dist()) << '\n';
    }
}

inline constexpr const char* kParetoHeader = "generation,individual_id,intensity,degrad,dist";

struct RunResult {
    ParetoArchive archive;
    bool completed = false;
    std::string error;
};

[[nodiscard]] inline auto load_frames(const RunConfig& cfg) -> std::vector<Image>
{
    std::vector<Image> frames;
    for (const auto& p : cfg.images) {
        frames.push_back(read_png(p));
    }
    return frames;
}

/// Runs the attack described by `cfg` and writes
///   <out>/pareto.csv, <out>/masks/gen<G>_ind<I>.bfm,
///   <out>/images/gen<G>_ind<I>.png, <out>/run.json.
/// Masks and images are written for the extreme members of every front and
/// for the whole final front. A failing detector stops the run; everything
/// archived up to then is kept on disk.
inline auto run_attack(const RunConfig& cfg, std::ostream& log) -> RunResult
{
    validate(cfg);
    auto const started = std::chrono::steady_clock::now();
    auto frames = load_frames(cfg);
    auto const shape = frames.front().shape();
    for (const auto& f : frames) {
        if (f.shape() != shape) {
            throw ConfigError("all frames must share one shape");
        }
    }
    auto const region = cfg.region.build(shape);
    auto detectors = make_detectors(cfg);
    AttackProblem problem(frames, detectors, region, cfg.dist);
    for (std::size_t k = 0; k < problem.detector_count(); ++k) {
        for (std::size_t t = 0; t < frames.size(); ++t) {
            if (count_valid(problem.baseline(k, t)) == 0) {
                log << "warning: detector " << k << " finds no object in frame " << t
                    << "; its degradation objective is fixed at 1\n";
            }
        }
    }

    auto const out = cfg.output.dir;
    std::filesystem::create_directories(out / "masks");
    std::filesystem::create_directories(out / "images");
    std::ofstream csv(out / "pareto.csv", std::ios::binary | std::ios::trunc);
    if (!csv) {
        throw std::runtime_error("cannot write " + (out / "pareto.csv").string());
    }
    csv << kParetoHeader << '\n';

    auto write_member = [&](const GenerationFront& front, const ArchiveEntry& e) {
        auto const stem = artifact_stem(front.generation, e.id);
        save_bfm(out / "masks" / (stem + ".bfm"), *e.genome);
        write_png(out / "images" / (stem + ".png"), apply_mask(frames.front(), *e.genome));
    };

    EvolveOptions options;
    options.on_generation = [&](const GenerationFront& front, std::span<const Individual>) {
        write_pareto_rows(csv, front);
        csv.flush();
        if (front.generation == cfg.ga.iterations) {
            for (const auto& e : front.members) {
                write_member(front, e);
            }
        } else {
            for (const auto* e : extreme_members(front, cfg.output.render_per_front)) {
                write_member(front, *e);
            }
        }
        log << "generation " << front.generation << ": front " << front.members.size() << ", best degrad "
            << format_double(std::min_element(front.members.begin(), front.members.end(),
                                              [](const auto& a, const auto& b) { return a.objectives.degrad < b.objectives.degrad; })
                                 ->objectives.degrad)
            << '\n';
    };

    RunResult result;
    try {
        result.archive = evolve(problem, shape, region, cfg.ga, options);
        result.completed = true;
    } catch (const EvolutionAborted& e) {
        result.archive = e.partial();
        result.error = e.what();
        log << "error: " << e.what() << '\n';
    }
    csv.close();

    auto const elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    nlohmann::json run{
        {"config", to_json(cfg)},
        {"seed", cfg.ga.rng_seed},
        {"completed", result.completed},
        {"generations_archived", result.archive.generations().size()},
        {"elapsed_seconds", elapsed},
    };
    if (!result.completed) {
        run["error"] = result.error;
    }
    std::ofstream(out / "run.json") << run.dump(2) << '\n';
    return result;
}

/// Objectives of one mask on one image under the config's detectors,
/// region and distance parameters.
[[nodiscard]] inline auto evaluate_once(const Image& img, const FilterMask& mask, const RunConfig& cfg) -> ObjectiveVector
{
    if (cfg.detectors.empty()) {
        throw ConfigError("at least one detector is required");
    }
    AttackProblem problem({img}, make_detectors(cfg), cfg.region.build(img.shape()), cfg.dist);
    return problem(mask);
}

/// "intensity: x\ndegrad: y\ndist: z\n" with six decimals; dist is un-negated.
[[nodiscard]] inline auto format_objectives(const ObjectiveVector& v) -> std::string
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << "intensity: " << v.intensity << "\ndegrad: " << v.degrad
       << "\ndist: " << v.dist() << '\n';
    return os.str();
}

} // namespace butterfly

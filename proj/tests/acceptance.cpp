// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "butterfly/butterfly.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace butterfly;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (pass) {
            detail = why;
        }
        pass = false;
    }
};

auto seconds_since(Clock::time_point t) -> double { return std::chrono::duration<double>(Clock::now() - t).count(); }

auto run_cli(const std::string& args, const fs::path& log) -> int
{
    auto const cmd = std::string(BUTTERFLY_CLI) + " " + args + " > " + log.string() + " 2>&1";
    auto const status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

auto iou_oracle() -> Outcome
{
    Outcome out;
    auto const start = Clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> corner(-20, 40);
    std::uniform_int_distribution<int> extent(0, 25);
    int mismatches = 0;
    for (int k = 0; k < 200; ++k) {
        oracle::GridBox a{};
        oracle::GridBox b{};
        for (auto* g : {&a, &b}) {
            g->x0 = corner(rng);
            g->x1 = g->x0 + extent(rng);
            g->y0 = corner(rng);
            g->y1 = g->y0 + extent(rng);
        }
        auto const r = oracle::pixel_iou(a, b);
        if (iou(a.to_box(), b.to_box()) != static_cast<double>(r.num) / static_cast<double>(r.den)) {
            ++mismatches;
        }
    }
    auto const elapsed = seconds_since(start);
    if (mismatches != 0) {
        out.fail(std::to_string(mismatches) + " of 200 pairs differ");
    }
    if (elapsed >= 1.0) {
        out.fail("took " + std::to_string(elapsed) + " s");
    }
    return out;
}

auto degrad_cases() -> Outcome
{
    Outcome out;
    BoundingBox const box{1, 0, 0, 10, 10};
    if (obj_degrad({box}, {box}) != 1.0) {
        out.fail("unchanged prediction is not 1");
    }
    if (obj_degrad({box}, {BoundingBox{2, 0, 0, 10, 10}}) != 0.0) {
        out.fail("class flip is not 0");
    }
    if (obj_degrad({box}, {BoundingBox{kNoObject, 0, 0, 10, 10}}) != 0.0) {
        out.fail("no-object replacement is not 0");
    }
    if (std::abs(obj_degrad({box}, {BoundingBox{1, 5, 0, 10, 10}}) - 1.0 / 3.0) > 1e-12) {
        out.fail("shifted box is not 1/3");
    }
    return out;
}

auto dist_oracle() -> Outcome
{
    Outcome out;
    std::mt19937_64 rng(2002);
    std::uniform_int_distribution<std::size_t> dim(1, 16);
    std::uniform_int_distribution<int> nboxes(0, 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        Shape const s{dim(rng), dim(rng)};
        DetectionSet boxes;
        for (int b = nboxes(rng); b > 0; --b) {
            boxes.push_back({1 + static_cast<int>(unit(rng) * 3), unit(rng) * double(s.height), unit(rng) * double(s.width),
                             1 + unit(rng) * 5, 1 + unit(rng) * 5});
        }
        auto const mask = testing_support::random_sparse_mask(s, 0.05 + unit(rng) * 0.25, rng);
        worst = std::max(worst, std::abs(obj_dist(s, boxes, mask, {}) - oracle::naive_obj_dist(s, boxes, mask, 5.0)));
    }
    if (!(worst <= 1e-9)) {
        out.fail("max deviation " + std::to_string(worst));
    }

    // In-box contributions are negative: a single pixel at a box center.
    for (int k = 0; k < 100; ++k) {
        Shape const s{dim(rng), dim(rng)};
        auto const i = static_cast<std::size_t>(unit(rng) * double(s.height));
        auto const j = static_cast<std::size_t>(unit(rng) * double(s.width));
        FilterMask m(s);
        m(i, j, 0) = 17;
        DetectionSet const boxes{{1, double(i), double(j), 2, 2}};
        if (!(obj_dist(s, boxes, m, {}) < 0.0) || !(oracle::naive_obj_dist(s, boxes, m, 5.0) < 0.0)) {
            out.fail("in-box pixel did not score negative");
            break;
        }
    }
    return out;
}

auto sort_equivalence() -> Outcome
{
    Outcome out;
    std::mt19937_64 rng(3003);
    std::uniform_int_distribution<std::size_t> size(1, 64);
    for (int k = 0; k < 100; ++k) {
        auto const pts = testing_support::random_objectives(size(rng), rng, k % 2 == 0 ? 5 : 1000);
        if (fast_nondominated_sort(pts).rank != oracle::peel_ranks(pts)) {
            out.fail("population " + std::to_string(k) + " ranks differ");
        }
    }
    return out;
}

auto crowding_suite() -> Outcome
{
    Outcome out;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<ObjectiveVector> const one{{3, 0.5, -1}};
    std::vector<ObjectiveVector> const two{{3, 0.5, -1}, {1, 0.9, -4}};
    if (crowding_distance(one) != std::vector<double>{inf} || crowding_distance(two) != std::vector<double>{inf, inf}) {
        out.fail("fronts of size <= 2 are not all infinite");
    }
    std::vector<ObjectiveVector> const even{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
    if (crowding_distance(even) != std::vector<double>{inf, 3.0, inf}) {
        out.fail("evenly spaced interior is not 3");
    }
    return out;
}

auto operator_budget() -> Outcome
{
    Outcome out;
    Shape const s{128, 64};
    auto const region = RegionMask::right_half(s);
    auto const budget = mutation_budget(s, 0.01);
    if (budget != 82) {
        out.fail("budget is " + std::to_string(budget));
    }
    GaConfig cfg;
    cfg.p_m = 1.0;
    std::mt19937_64 gen(4004);
    auto mask = project_mask(testing_support::random_sparse_mask(s, 0.5, gen), region);
    std::size_t worst = 0;
    for (std::uint64_t k = 0; k < 10000; ++k) {
        auto rng = make_stream(4004, Stream::variation, k);
        auto const next = mutate(mask, region, cfg, rng);
        auto const changed = testing_support::changed_pixels(mask, next);
        worst = std::max(worst, changed);
        if (!next.in_range() || !satisfies_region(next, region)) {
            out.fail("mutation " + std::to_string(k) + " left range or region");
            break;
        }
        mask = next;
    }
    if (worst > 82) {
        out.fail(std::to_string(worst) + " pixels changed by one mutation");
    }
    return out;
}

struct FrontRow {
    std::size_t generation;
    std::uint64_t id;
    double degrad;
};

auto parse_pareto(const fs::path& p) -> std::vector<FrontRow>
{
    std::istringstream is(testing_support::read_file(p));
    std::vector<FrontRow> rows;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        std::istringstream fields(line);
        std::string g;
        std::string id;
        std::string intensity;
        std::string degrad;
        std::getline(fields, g, ',');
        std::getline(fields, id, ',');
        std::getline(fields, intensity, ',');
        std::getline(fields, degrad, ',');
        rows.push_back({std::stoul(g), std::stoull(id), std::stod(degrad)});
    }
    return rows;
}

auto same_tree(const fs::path& a, const fs::path& b, std::string& why) -> bool
{
    if (testing_support::read_file(a / "pareto.csv") != testing_support::read_file(b / "pareto.csv")) {
        why = "pareto.csv differs";
        return false;
    }
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(a / "masks")) {
        auto const twin = b / "masks" / entry.path().filename();
        if (!fs::exists(twin) || testing_support::read_file(entry.path()) != testing_support::read_file(twin)) {
            why = entry.path().filename().string() + " differs";
            return false;
        }
        ++n;
    }
    std::size_t m = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(b / "masks")) {
        ++m;
    }
    if (n == 0 || n != m) {
        why = "mask sets differ";
        return false;
    }
    return true;
}

auto canonical_end_to_end(const fs::path& work) -> Outcome
{
    Outcome out;
    if (run_cli("fixture --name canonical-butterfly --out " + work.string(), work / "fixture.log") != 0) {
        out.fail("fixture command failed");
        return out;
    }
    auto const start = Clock::now();
    if (run_cli("attack --config " + (work / "config.json").string() + " --seed 1 --out " + (work / "run1").string(),
                work / "run1.log")
        != 0) {
        out.fail("attack command failed");
        return out;
    }
    auto const elapsed = seconds_since(start);
    if (elapsed >= 120.0) {
        out.fail("took " + std::to_string(elapsed) + " s");
    }

    auto const rows = parse_pareto(work / "run1" / "pareto.csv");
    std::map<std::size_t, double> best;
    for (const auto& r : rows) {
        auto [it, inserted] = best.emplace(r.generation, r.degrad);
        if (!inserted) {
            it->second = std::min(it->second, r.degrad);
        }
    }
    if (best.size() != 101) {
        out.fail("archived " + std::to_string(best.size()) + " generations");
        return out;
    }
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& [g, d] : best) {
        if (d > previous) {
            out.fail("best degrad rises at generation " + std::to_string(g));
        }
        previous = d;
    }

    bool found = false;
    double best_final = 1.0;
    for (const auto& r : rows) {
        if (r.generation != 100) {
            continue;
        }
        auto const mask = load_bfm(work / "run1" / "masks" / (artifact_stem(100, r.id) + ".bfm"));
        auto const left_zero = satisfies_region(mask, RegionMask::right_half(mask.shape()));
        best_final = std::min(best_final, r.degrad);
        found = found || (r.degrad <= 0.9 && left_zero);
    }
    if (!found) {
        out.fail("no final member with degrad <= 0.9 and a zero left half (best " + std::to_string(best_final) + ")");
    }
    return out;
}

auto reproducibility(const fs::path& work) -> Outcome
{
    Outcome out;
    auto const config = (work / "config.json").string();
    if (run_cli("attack --config " + config + " --seed 1 --out " + (work / "run2").string(), work / "run2.log") != 0
        || run_cli("attack --config " + config + " --seed 1 --ga.workers 1 --out " + (work / "w1").string(), work / "w1.log") != 0
        || run_cli("attack --config " + config + " --seed 1 --ga.workers 4 --out " + (work / "w4").string(), work / "w4.log") != 0) {
        out.fail("attack command failed");
        return out;
    }
    std::string why;
    if (!same_tree(work / "run1", work / "run2", why)) {
        out.fail("rerun: " + why);
    }
    if (!same_tree(work / "w1", work / "w4", why)) {
        out.fail("workers 1 vs 4: " + why);
    }
    return out;
}

/// Evaluates every individual under one detector and under a pair of
/// identical detectors, records the largest difference, returns the single one.
struct EnsembleProbe {
    const AttackProblem* single;
    const AttackProblem* pair;
    mutable double worst = 0.0;
    mutable std::size_t evaluations = 0;

    auto operator()(const FilterMask& m) const -> ObjectiveVector
    {
        auto const a = (*single)(m);
        auto const b = (*pair)(m);
        worst = std::max({worst, std::abs(a.intensity - b.intensity), std::abs(a.degrad - b.degrad), std::abs(a.neg_dist - b.neg_dist)});
        ++evaluations;
        return a;
    }
};

auto ensemble_reduction() -> Outcome
{
    Outcome out;
    auto const scene = canonical_butterfly_scene();
    auto const region = RegionMask::right_half(scene.shape());
    auto const d1 = std::make_shared<SyntheticDetector>();
    auto const d2 = std::make_shared<SyntheticDetector>();
    AttackProblem const single({scene}, {d1}, region, {});
    AttackProblem const pair({scene}, {d1, d2}, region, {});
    EnsembleProbe const probe{&single, &pair};
    GaConfig cfg;
    (void)evolve(probe, scene.shape(), region, cfg);
    if (probe.evaluations != 101 * 101) {
        out.fail("evaluated " + std::to_string(probe.evaluations) + " individuals");
    }
    if (!(probe.worst <= 1e-12)) {
        out.fail("max deviation " + std::to_string(probe.worst));
    }
    return out;
}

} // namespace

auto main() -> int
{
    testing_support::TempDir work("acceptance");
    std::vector<std::pair<std::string, std::function<Outcome()>>> const criteria{
        {"iou matches the pixel-counting oracle on 200 pairs in under 1 s", iou_oracle},
        {"degradation cases: unchanged 1, class flip 0, shifted box 1/3", degrad_cases},
        {"distance objective matches the naive oracle on 100 cases; in-box pixels score negative", dist_oracle},
        {"non-dominated sort matches the peel-off oracle on 100 populations", sort_equivalence},
        {"crowding: small fronts infinite, evenly spaced interior 3", crowding_suite},
        {"10000 mutations stay in range, in region and within 82 pixels", operator_budget},
        {"canonical butterfly run reaches degrad <= 0.9 with a zero left half in under 2 min", [&] { return canonical_end_to_end(work.path()); }},
        {"reruns and worker counts 1/4 give byte-identical pareto.csv and masks", [&] { return reproducibility(work.path()); }},
        {"ensemble of two identical detectors equals one for every individual", ensemble_reduction},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome result;
        try {
            result = check();
        } catch (const std::exception& e) {
            result.fail(std::string("exception: ") + e.what());
        }
        std::cout << (result.pass ? "PASS " : "FAIL ") << name;
        if (!result.pass) {
            std::cout << " (" << result.detail << ")";
            ++failed;
        }
        std::cout << std::endl;
    }
    return failed == 0 ? 0 : 1;
}

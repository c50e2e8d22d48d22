#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "butterfly/butterfly.hpp"

namespace {

namespace fs = std::filesystem;
using namespace butterfly;

struct AttackArgs {
    fs::path config;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> population_size;
    std::optional<std::size_t> workers;
    std::optional<double> p_c;
    std::optional<double> p_m;
    std::optional<double> window_fraction;
    std::optional<double> epsilon;
};

auto run_attack_command(const AttackArgs& args) -> int
{
    auto cfg = load_run_config(args.config);
    if (args.seed) {
        cfg.ga.rng_seed = *args.seed;
    }
    if (args.out) {
        cfg.output.dir = *args.out;
    }
    if (args.iterations) {
        cfg.ga.iterations = *args.iterations;
    }
    if (args.population_size) {
        cfg.ga.population_size = *args.population_size;
    }
    if (args.workers) {
        cfg.ga.workers = *args.workers;
    }
    if (args.p_c) {
        cfg.ga.p_c = *args.p_c;
    }
    if (args.p_m) {
        cfg.ga.p_m = *args.p_m;
    }
    if (args.window_fraction) {
        cfg.ga.window_fraction = *args.window_fraction;
    }
    if (args.epsilon) {
        cfg.dist.epsilon = *args.epsilon;
    }
    auto const result = run_attack(cfg, std::cerr);
    if (!result.completed) {
        return 3;
    }
    std::cout << "archive written to " << cfg.output.dir.string() << '\n';
    return 0;
}

auto run_eval_command(const fs::path& image, const fs::path& mask, const fs::path& config) -> int
{
    auto const cfg = load_run_config(config);
    std::cout << format_objectives(evaluate_once(read_png(image), load_bfm(mask), cfg));
    return 0;
}

auto run_render_command(const fs::path& image, const fs::path& mask, const fs::path& out, const std::optional<fs::path>& config) -> int
{
    std::shared_ptr<const Detector> detector;
    if (config) {
        auto const cfg = load_run_config(*config);
        if (cfg.detectors.empty()) {
            throw ConfigError("render: config has no detector");
        }
        detector = make_detector(cfg.detectors.front());
    } else {
        detector = std::make_shared<SyntheticDetector>();
    }
    auto const paths = render_individual(read_png(image), load_bfm(mask), *detector, out);
    std::cout << paths.perturbed.string() << '\n' << paths.comparison.string() << '\n';
    return 0;
}

} // namespace

auto main(int argc, char** argv) -> int
{
    CLI::App app{"Multi-objective search for spatially unrelated perturbations that degrade object detectors"};
    app.require_subcommand(1);

    AttackArgs attack;
    auto* attack_cmd = app.add_subcommand("attack", "Run the NSGA-II attack described by a JSON config");
    attack_cmd->add_option("--config", attack.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    attack_cmd->add_option("--seed", attack.seed, "Override ga.rng_seed");
    attack_cmd->add_option("--out", attack.out, "Override output.dir");
    attack_cmd->add_option("--ga.iterations", attack.iterations);
    attack_cmd->add_option("--ga.population_size", attack.population_size);
    attack_cmd->add_option("--ga.workers", attack.workers);
    attack_cmd->add_option("--ga.p_c", attack.p_c);
    attack_cmd->add_option("--ga.p_m", attack.p_m);
    attack_cmd->add_option("--ga.window_fraction", attack.window_fraction);
    attack_cmd->add_option("--dist.epsilon", attack.epsilon);

    fs::path eval_image;
    fs::path eval_mask;
    fs::path eval_config;
    auto* eval_cmd = app.add_subcommand("eval", "Print the objectives of one mask");
    eval_cmd->add_option("--image", eval_image)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--mask", eval_mask, "BFM1 mask")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--config", eval_config, "Detectors, region and dist parameters")->required()->check(CLI::ExistingFile);

    fs::path render_image;
    fs::path render_mask;
    fs::path render_out;
    std::optional<fs::path> render_config;
    auto* render_cmd = app.add_subcommand("render", "Write the perturbed image and an annotated comparison");
    render_cmd->add_option("--image", render_image)->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--mask", render_mask)->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--out", render_out)->required();
    render_cmd->add_option("--config", render_config, "Detector used for annotation (default: synthetic)");

    std::string fixture_name;
    fs::path fixture_out;
    auto* fixture_cmd = app.add_subcommand("fixture", "Emit a deterministic test scene and its config");
    fixture_cmd->add_option("--name", fixture_name)->required()->check(CLI::IsMember(fixture_names()));
    fixture_cmd->add_option("--out", fixture_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*attack_cmd) {
            return run_attack_command(attack);
        }
        if (*eval_cmd) {
            return run_eval_command(eval_image, eval_mask, eval_config);
        }
        if (*render_cmd) {
            return run_render_command(render_image, render_mask, render_out, render_config);
        }
        if (*fixture_cmd) {
            write_fixture(fixture_name, fixture_out);
            std::cout << (fixture_out / "scene.png").string() << '\n' << (fixture_out / "config.json").string() << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "butterfly/core/image.hpp"
#include "butterfly/detectors/external.hpp"
#include "butterfly/detectors/synthetic.hpp"
#include "butterfly/nsga2/config.hpp"
#include "butterfly/objectives.hpp"

namespace butterfly {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A remote detector reached either by spawning `command` or by TCP `address`.
struct ExternalDetectorSpec {
    std::vector<std::string> command;
    std::string address;
    double timeout_s = 30.0;
};

using DetectorSpec = std::variant<SyntheticDetectorConfig, ExternalDetectorSpec>;

struct Rect {
    std::size_t top = 0;
    std::size_t left = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

struct RegionSpec {
    enum class Kind {
        all,
        right_half,
        left_half,
        rectangles,
    };
    Kind kind = Kind::all;
    std::vector<Rect> rects;

    [[nodiscard]] auto build(Shape shape) const -> RegionMask
    {
        switch (kind) {
        case Kind::all: return RegionMask::all(shape);
        case Kind::right_half: return RegionMask::right_half(shape);
        case Kind::left_half: return RegionMask::left_half(shape);
        case Kind::rectangles: {
            auto region = RegionMask::none(shape);
            for (const auto& r : rects) {
                if (r.top + r.height > shape.height || r.left + r.width > shape.width) {
                    throw ConfigError("region rectangle exceeds the image bounds " + to_string(shape));
                }
                for (std::size_t i = r.top; i < r.top + r.height; ++i) {
                    for (std::size_t j = r.left; j < r.left + r.width; ++j) {
                        region.set(i, j, true);
                    }
                }
            }
            return region;
        }
        }
        throw ConfigError("unknown region kind");
    }
};

struct OutputSpec {
    std::filesystem::path dir = "out";
    /// Individuals per archived front written as mask and image files.
    std::size_t render_per_front = 3;
};

struct RunConfig {
    /// One image, or an ordered frame sequence attacked with a single mask.
    std::vector<std::filesystem::path> images;
    std::vector<DetectorSpec> detectors;
    RegionSpec region;
    GaConfig ga;
    DistParams dist;
    OutputSpec output;
};

namespace detail {
    using nlohmann::json;

    inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where)
    {
        std::set<std::string> names(known.begin(), known.end());
        for (const auto& [key, value] : j.items()) {
            if (!names.contains(key)) {
                throw ConfigError("unknown field '" + key + "' in " + where);
            }
        }
    }

    template <class T>
    void read_opt(const json& j, const char* key, T& out, const std::string& where)
    {
        if (auto it = j.find(key); it != j.end()) {
            try {
                out = it->get<T>();
            } catch (const json::exception&) {
                throw ConfigError("bad value for '" + where + "." + key + "'");
            }
        }
    }

    inline auto region_kind(const std::string& name) -> RegionSpec::Kind
    {
        if (name == "all") {
            return RegionSpec::Kind::all;
        }
        if (name == "right-half") {
            return RegionSpec::Kind::right_half;
        }
        if (name == "left-half") {
            return RegionSpec::Kind::left_half;
        }
        if (name == "rectangles") {
            return RegionSpec::Kind::rectangles;
        }
        throw ConfigError("unknown region type '" + name + "'");
    }

    inline auto region_name(RegionSpec::Kind kind) -> const char*
    {
        switch (kind) {
        case RegionSpec::Kind::all: return "all";
        case RegionSpec::Kind::right_half: return "right-half";
        case RegionSpec::Kind::left_half: return "left-half";
        case RegionSpec::Kind::rectangles: return "rectangles";
        }
        return "all";
    }
} // namespace detail

/// Parses a config document; relative paths resolve against `base_dir`.
[[nodiscard]] inline auto parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) -> RunConfig
{
    using detail::read_opt;
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    detail::reject_unknown(j, {"images", "detectors", "region", "ga", "dist", "output"}, "config");
    RunConfig cfg;
    auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() || base_dir.empty() ? p : base_dir / p; };

    if (auto it = j.find("images"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("'images' must be an array of paths");
        }
        for (const auto& p : *it) {
            if (!p.is_string()) {
                throw ConfigError("'images' entries must be strings");
            }
            cfg.images.push_back(resolve(p.get<std::string>()));
        }
    }

    if (auto it = j.find("detectors"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("'detectors' must be an array");
        }
        for (const auto& d : *it) {
            std::string type = "synthetic";
            read_opt(d, "type", type, "detectors[]");
            if (type == "synthetic") {
                detail::reject_unknown(d, {"type", "theta", "alpha", "m0", "min_area"}, "synthetic detector");
                SyntheticDetectorConfig s;
                read_opt(d, "theta", s.theta, "detectors[]");
                read_opt(d, "alpha", s.alpha, "detectors[]");
                read_opt(d, "m0", s.m0, "detectors[]");
                read_opt(d, "min_area", s.min_area, "detectors[]");
                cfg.detectors.emplace_back(s);
            } else if (type == "external") {
                detail::reject_unknown(d, {"type", "command", "address", "timeout_s"}, "external detector");
                ExternalDetectorSpec e;
                read_opt(d, "command", e.command, "detectors[]");
                read_opt(d, "address", e.address, "detectors[]");
                read_opt(d, "timeout_s", e.timeout_s, "detectors[]");
                if (e.command.empty() == e.address.empty()) {
                    throw ConfigError("external detector needs exactly one of 'command' or 'address'");
                }
                cfg.detectors.emplace_back(std::move(e));
            } else {
                throw ConfigError("unknown detector type '" + type + "'");
            }
        }
    }

    if (auto it = j.find("region"); it != j.end()) {
        if (it->is_string()) {
            cfg.region.kind = detail::region_kind(it->get<std::string>());
        } else if (it->is_object()) {
            detail::reject_unknown(*it, {"type", "rects"}, "region");
            std::string type = "all";
            read_opt(*it, "type", type, "region");
            cfg.region.kind = detail::region_kind(type);
            if (auto rs = it->find("rects"); rs != it->end()) {
                for (const auto& r : *rs) {
                    detail::reject_unknown(r, {"top", "left", "height", "width"}, "region rect");
                    Rect rect;
                    read_opt(r, "top", rect.top, "region.rects[]");
                    read_opt(r, "left", rect.left, "region.rects[]");
                    read_opt(r, "height", rect.height, "region.rects[]");
                    read_opt(r, "width", rect.width, "region.rects[]");
                    cfg.region.rects.push_back(rect);
                }
            }
        } else {
            throw ConfigError("'region' must be a string or an object");
        }
    }

    if (auto it = j.find("ga"); it != j.end()) {
        detail::reject_unknown(*it, {"iterations", "population_size", "p_c", "p_m", "window_fraction", "rng_seed", "init_sigma", "workers"}, "ga");
        read_opt(*it, "iterations", cfg.ga.iterations, "ga");
        read_opt(*it, "population_size", cfg.ga.population_size, "ga");
        read_opt(*it, "p_c", cfg.ga.p_c, "ga");
        read_opt(*it, "p_m", cfg.ga.p_m, "ga");
        read_opt(*it, "window_fraction", cfg.ga.window_fraction, "ga");
        read_opt(*it, "rng_seed", cfg.ga.rng_seed, "ga");
        read_opt(*it, "init_sigma", cfg.ga.init_sigma, "ga");
        read_opt(*it, "workers", cfg.ga.workers, "ga");
    }
    if (auto it = j.find("dist"); it != j.end()) {
        detail::reject_unknown(*it, {"epsilon"}, "dist");
        read_opt(*it, "epsilon", cfg.dist.epsilon, "dist");
    }
    if (auto it = j.find("output"); it != j.end()) {
        detail::reject_unknown(*it, {"dir", "render_per_front"}, "output");
        std::string dir = cfg.output.dir.string();
        read_opt(*it, "dir", dir, "output");
        cfg.output.dir = resolve(dir);
        read_opt(*it, "render_per_front", cfg.output.render_per_front, "output");
    } else {
        cfg.output.dir = resolve(cfg.output.dir);
    }
    return cfg;
}

/// Checks everything that does not need the images loaded.
inline void validate(const RunConfig& cfg)
{
    if (cfg.images.empty()) {
        throw ConfigError("at least one image is required");
    }
    if (cfg.detectors.empty()) {
        throw ConfigError("at least one detector is required");
    }
    try {
        cfg.ga.validate();
        cfg.dist.validate();
        for (const auto& d : cfg.detectors) {
            if (const auto* s = std::get_if<SyntheticDetectorConfig>(&d)) {
                s->validate();
            } else if (!(std::get<ExternalDetectorSpec>(d).timeout_s > 0.0)) {
                throw std::invalid_argument("external detector: timeout_s must be > 0");
            }
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.region.kind == RegionSpec::Kind::rectangles && cfg.region.rects.empty()) {
        throw ConfigError("region 'rectangles' needs at least one rect");
    }
}

[[nodiscard]] inline auto load_run_config(const std::filesystem::path& path) -> RunConfig
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

[[nodiscard]] inline auto to_json(const RunConfig& cfg) -> nlohmann::json
{
    using nlohmann::json;
    json images = json::array();
    for (const auto& p : cfg.images) {
        images.push_back(p.string());
    }
    json detectors = json::array();
    for (const auto& d : cfg.detectors) {
        if (const auto* s = std::get_if<SyntheticDetectorConfig>(&d)) {
            detectors.push_back({{"type", "synthetic"}, {"theta", s->theta}, {"alpha", s->alpha}, {"m0", s->m0}, {"min_area", s->min_area}});
        } else {
            const auto& e = std::get<ExternalDetectorSpec>(d);
            json ext{{"type", "external"}, {"timeout_s", e.timeout_s}};
            if (!e.command.empty()) {
                ext["command"] = e.command;
            } else {
                ext["address"] = e.address;
            }
            detectors.push_back(std::move(ext));
        }
    }
    json region{{"type", detail::region_name(cfg.region.kind)}};
    if (cfg.region.kind == RegionSpec::Kind::rectangles) {
        region["rects"] = json::array();
        for (const auto& r : cfg.region.rects) {
            region["rects"].push_back({{"top", r.top}, {"left", r.left}, {"height", r.height}, {"width", r.width}});
        }
    }
    return json{
        {"images", std::move(images)},
        {"detectors", std::move(detectors)},
        {"region", std::move(region)},
        {"ga",
         {{"iterations", cfg.ga.iterations},
          {"population_size", cfg.ga.population_size},
          {"p_c", cfg.ga.p_c},
          {"p_m", cfg.ga.p_m},
          {"window_fraction", cfg.ga.window_fraction},
          {"rng_seed", cfg.ga.rng_seed},
          {"init_sigma", cfg.ga.init_sigma},
          {"workers", cfg.ga.workers}}},
        {"dist", {{"epsilon", cfg.dist.epsilon}}},
        {"output", {{"dir", cfg.output.dir.string()}, {"render_per_front", cfg.output.render_per_front}}},
    };
}

[[nodiscard]] inline auto make_detector(const DetectorSpec& spec) -> std::shared_ptr<const Detector>
{
    if (const auto* s = std::get_if<SyntheticDetectorConfig>(&spec)) {
        return std::make_shared<SyntheticDetector>(*s);
    }
    const auto& e = std::get<ExternalDetectorSpec>(spec);
    ConnectionOptions options{std::chrono::milliseconds(static_cast<long long>(e.timeout_s * 1000.0))};
    if (!e.command.empty()) {
        return ExternalDetector::spawn(e.command, options);
    }
    return ExternalDetector::connect(e.address, options);
}

[[nodiscard]] inline auto make_detectors(const RunConfig& cfg) -> std::vector<std::shared_ptr<const Detector>>
{
    std::vector<std::shared_ptr<const Detector>> out;
    for (const auto& spec : cfg.detectors) {
        out.push_back(make_detector(spec));
    }
    return out;
}

} // namespace butterfly

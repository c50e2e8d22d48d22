#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "butterfly/core/image.hpp"
#include "butterfly/core/png.hpp"

namespace butterfly {

/// Geometry of the canonical butterfly scene: a 128x64 near-gray image with
/// one red block in the left half whose rows sit just above the synthetic
/// detector's default threshold, brightest at the bottom. Raising the global
/// mean from the right half lifts the threshold past the top rows first, so
/// the block shrinks row by row before it disappears.
struct ButterflyScene {
    static constexpr std::size_t kHeight = 128;
    static constexpr std::size_t kWidth = 64;
    static constexpr std::size_t kBlockTop = 20;
    static constexpr std::size_t kBlockLeft = 8;
    static constexpr std::size_t kBlockRows = 8;
    static constexpr std::size_t kBlockCols = 8;
    static constexpr std::uint8_t kTopRed = 201;
    static constexpr std::array<std::uint8_t, 3> kBackground{96, 96, 96};
    /// Rows from here down are tinted one step bluer. This puts the default
    /// threshold near 200.5, so the top block row (201) survives every
    /// initial mask of the reference seed but falls to an evolved one.
    static constexpr std::size_t kTintRow = 108;
};

[[nodiscard]] inline auto canonical_butterfly_scene() -> Image
{
    using S = ButterflyScene;
    Image img(S::kHeight, S::kWidth);
    for (std::size_t i = 0; i < S::kHeight; ++i) {
        for (std::size_t j = 0; j < S::kWidth; ++j) {
            auto const blue = static_cast<std::uint8_t>(S::kBackground[2] + (i >= S::kTintRow ? 1 : 0));
            img.set_pixel(i, j, S::kBackground[0], S::kBackground[1], blue);
        }
    }
    for (std::size_t r = 0; r < S::kBlockRows; ++r) {
        for (std::size_t c = 0; c < S::kBlockCols; ++c) {
            img(S::kBlockTop + r, S::kBlockLeft + c, 0) = static_cast<std::uint8_t>(S::kTopRed + r);
        }
    }
    return img;
}

/// Attack config for the canonical scene: one default synthetic detector,
/// right-half region, default GA parameters, seed 1.
[[nodiscard]] inline auto canonical_butterfly_config(const std::string& image_name = "scene.png") -> nlohmann::json
{
    return nlohmann::json{
        {"images", {image_name}},
        {"detectors", {{{"type", "synthetic"}}}},
        {"region", {{"type", "right-half"}}},
        {"ga", {{"rng_seed", 1}}},
        {"dist", {{"epsilon", 5.0}}},
        {"output", {{"dir", "out"}}},
    };
}

inline auto fixture_names() -> std::vector<std::string> { return {"canonical-butterfly"}; }

/// Writes `scene.png` and `config.json` for the named fixture into `dir`.
inline void write_fixture(const std::string& name, const std::filesystem::path& dir)
{
    if (name != "canonical-butterfly") {
        throw std::invalid_argument("unknown fixture '" + name + "'");
    }
    std::filesystem::create_directories(dir);
    write_png(dir / "scene.png", canonical_butterfly_scene());
    std::ofstream os(dir / "config.json");
    if (!os) {
        throw std::runtime_error("cannot write " + (dir / "config.json").string());
    }
    os << canonical_butterfly_config().dump(2) << '\n';
}

} // namespace butterfly

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

#include "butterfly/core/box.hpp"
#include "butterfly/core/image.hpp"
#include "butterfly/core/png.hpp"
#include "butterfly/detectors/detector.hpp"

namespace butterfly {

inline constexpr std::size_t kPanelGap = 4;

/// Outline color of a class label.
[[nodiscard]] inline auto class_color(ClassLabel cl) -> std::array<std::uint8_t, 3>
{
    static constexpr std::array<std::array<std::uint8_t, 3>, 6> palette{{
        {0, 255, 0},
        {255, 0, 255},
        {0, 255, 255},
        {255, 255, 0},
        {255, 128, 0},
        {0, 128, 255},
    }};
    return palette[static_cast<std::size_t>(cl > 0 ? cl - 1 : 0) % palette.size()];
}

/// Draws the one-pixel outline of every valid box onto `img`, offset by
/// `col_offset` columns. Outline rows/columns are the outermost pixel
/// centers inside the box, clipped to the target.
inline void draw_boxes(Image& img, const DetectionSet& boxes, std::size_t col_offset = 0, std::size_t panel_width = 0)
{
    if (panel_width == 0) {
        panel_width = img.width() - col_offset;
    }
    auto const last_row = static_cast<double>(img.height()) - 1.0;
    auto const last_col = static_cast<double>(panel_width) - 1.0;
    for (const auto& b : boxes) {
        if (!b.valid()) {
            continue;
        }
        auto const r0 = std::max(0.0, std::ceil(b.min_x()));
        auto const r1 = std::min(last_row, std::floor(b.max_x()));
        auto const c0 = std::max(0.0, std::ceil(b.min_y()));
        auto const c1 = std::min(last_col, std::floor(b.max_y()));
        if (r0 > r1 || c0 > c1) {
            continue;
        }
        auto const color = class_color(b.cl);
        auto paint = [&](double r, double c) {
            img.set_pixel(static_cast<std::size_t>(r), col_offset + static_cast<std::size_t>(c), color[0], color[1], color[2]);
        };
        for (auto c = c0; c <= c1; c += 1.0) {
            paint(r0, c);
            paint(r1, c);
        }
        for (auto r = r0; r <= r1; r += 1.0) {
            paint(r, c0);
            paint(r, c1);
        }
    }
}

/// Original with its detections | white gap | perturbed with its detections.
[[nodiscard]] inline auto comparison_panel(const Image& original, const DetectionSet& original_boxes, const Image& perturbed,
                                           const DetectionSet& perturbed_boxes) -> Image
{
    require_same_shape(original.shape(), perturbed.shape(), "comparison_panel");
    auto const w = original.width();
    Image panel(original.height(), 2 * w + kPanelGap, 255);
    for (std::size_t i = 0; i < original.height(); ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            for (std::size_t c = 0; c < kChannels; ++c) {
                panel(i, j, c) = original(i, j, c);
                panel(i, w + kPanelGap + j, c) = perturbed(i, j, c);
            }
        }
    }
    draw_boxes(panel, original_boxes, 0, w);
    draw_boxes(panel, perturbed_boxes, w + kPanelGap, w);
    return panel;
}

struct RenderPaths {
    std::filesystem::path perturbed;
    std::filesystem::path comparison;
};

/// Writes `<stem>_perturbed.png` and `<stem>_comparison.png` into `out_dir`.
inline auto render_individual(const Image& img, const FilterMask& mask, const Detector& detector,
                              const std::filesystem::path& out_dir, const std::string& stem = "render") -> RenderPaths
{
    auto const perturbed = apply_mask(img, mask);
    std::filesystem::create_directories(out_dir);
    RenderPaths paths{out_dir / (stem + "_perturbed.png"), out_dir / (stem + "_comparison.png")};
    write_png(paths.perturbed, perturbed);
    write_png(paths.comparison, comparison_panel(img, detector.detect(img), perturbed, detector.detect(perturbed)));
    return paths;
}

} // namespace butterfly

#pragma once

#include <algorithm>
#include <vector>

namespace butterfly {

using ClassLabel = int;

/// Reserved label of a prediction that contains no object.
inline constexpr ClassLabel kNoObject = 0;

/// Axis-aligned prediction (cl, x, y, l, w). The box spans
/// [x - l/2, x + l/2] along the first image dimension and
/// [y - w/2, y + w/2] along the second, in pixel-index units where
/// pixel (i, j) is centered at (i, j).
struct BoundingBox {
    ClassLabel cl = kNoObject;
    double x = 0.0;
    double y = 0.0;
    double l = 0.0;
    double w = 0.0;

    [[nodiscard]] constexpr auto valid() const noexcept -> bool { return cl != kNoObject; }
    [[nodiscard]] constexpr auto area() const noexcept -> double { return l * w; }
    [[nodiscard]] constexpr auto min_x() const noexcept -> double { return x - l / 2; }
    [[nodiscard]] constexpr auto max_x() const noexcept -> double { return x + l / 2; }
    [[nodiscard]] constexpr auto min_y() const noexcept -> double { return y - w / 2; }
    [[nodiscard]] constexpr auto max_y() const noexcept -> double { return y + w / 2; }

    friend constexpr auto operator==(const BoundingBox&, const BoundingBox&) -> bool = default;
};

using DetectionSet = std::vector<BoundingBox>;

[[nodiscard]] inline auto count_valid(const DetectionSet& boxes) -> std::size_t
{
    return static_cast<std::size_t>(std::count_if(boxes.begin(), boxes.end(), [](const BoundingBox& b) { return b.valid(); }));
}

/// Jaccard index of two axis-aligned boxes. Zero-area boxes give 0.
[[nodiscard]] inline auto iou(const BoundingBox& a, const BoundingBox& b) -> double
{
    auto const area_a = a.area();
    auto const area_b = b.area();
    if (area_a <= 0.0 || area_b <= 0.0) {
        return 0.0;
    }
    auto const ix = std::min(a.max_x(), b.max_x()) - std::max(a.min_x(), b.min_x());
    auto const iy = std::min(a.max_y(), b.max_y()) - std::max(a.min_y(), b.min_y());
    if (ix <= 0.0 || iy <= 0.0) {
        return 0.0;
    }
    auto const inter = ix * iy;
    return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

} // namespace butterfly

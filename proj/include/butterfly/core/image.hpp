#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace butterfly {

/// Raster extent. `height` indexes the first image dimension (i, x, l),
/// `width` the second (j, y, w).
struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;

    [[nodiscard]] constexpr auto pixels() const noexcept -> std::size_t { return height * width; }
    friend constexpr auto operator==(Shape, Shape) -> bool = default;
};

inline auto to_string(Shape s) -> std::string
{
    return std::to_string(s.height) + "x" + std::to_string(s.width);
}

class ShapeMismatch : public std::invalid_argument {
public:
    ShapeMismatch(std::string_view what, Shape a, Shape b)
        : std::invalid_argument(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b))
    {
    }
};

inline void require_same_shape(Shape a, Shape b, std::string_view what)
{
    if (a != b) {
        throw ShapeMismatch(what, a, b);
    }
}

inline constexpr std::size_t kChannels = 3;
inline constexpr int kMaxPerturbation = 255;

namespace detail {
    inline void require_nonempty(Shape s, std::string_view what)
    {
        if (s.height == 0 || s.width == 0) {
            throw std::invalid_argument(std::string(what) + ": height and width must be >= 1");
        }
    }
} // namespace detail

/// 8-bit RGB raster stored row-major with interleaved channels.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, std::uint8_t fill = 0)
        : shape_{height, width}, data_(height * width * kChannels, fill)
    {
        detail::require_nonempty(shape_, "Image");
    }
    Image(Shape shape, std::vector<std::uint8_t> data)
        : shape_(shape), data_(std::move(data))
    {
        detail::require_nonempty(shape_, "Image");
        if (data_.size() != shape_.pixels() * kChannels) {
            throw std::invalid_argument("Image: buffer size does not match shape");
        }
    }

    [[nodiscard]] auto shape() const noexcept -> Shape { return shape_; }
    [[nodiscard]] auto height() const noexcept -> std::size_t { return shape_.height; }
    [[nodiscard]] auto width() const noexcept -> std::size_t { return shape_.width; }

    [[nodiscard]] auto operator()(std::size_t i, std::size_t j, std::size_t c) const -> std::uint8_t
    {
        return data_[(i * shape_.width + j) * kChannels + c];
    }
    auto operator()(std::size_t i, std::size_t j, std::size_t c) -> std::uint8_t&
    {
        return data_[(i * shape_.width + j) * kChannels + c];
    }
    void set_pixel(std::size_t i, std::size_t j, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    {
        auto* p = &data_[(i * shape_.width + j) * kChannels];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    [[nodiscard]] auto data() const noexcept -> std::span<const std::uint8_t> { return data_; }
    [[nodiscard]] auto data() noexcept -> std::span<std::uint8_t> { return data_; }

    friend auto operator==(const Image&, const Image&) -> bool = default;

private:
    Shape shape_;
    std::vector<std::uint8_t> data_;
};

/// Signed per-pixel, per-channel perturbation; every entry in [-255, 255].
class FilterMask {
public:
    using value_type = std::int16_t;

    FilterMask() = default;
    explicit FilterMask(Shape shape)
        : shape_(shape), data_(shape.pixels() * kChannels, 0)
    {
        detail::require_nonempty(shape_, "FilterMask");
    }
    FilterMask(std::size_t height, std::size_t width)
        : FilterMask(Shape{height, width})
    {
    }
    FilterMask(Shape shape, std::vector<value_type> data)
        : shape_(shape), data_(std::move(data))
    {
        detail::require_nonempty(shape_, "FilterMask");
        if (data_.size() != shape_.pixels() * kChannels) {
            throw std::invalid_argument("FilterMask: buffer size does not match shape");
        }
        if (!in_range()) {
            throw std::out_of_range("FilterMask: value outside [-255, 255]");
        }
    }

    [[nodiscard]] auto shape() const noexcept -> Shape { return shape_; }
    [[nodiscard]] auto height() const noexcept -> std::size_t { return shape_.height; }
    [[nodiscard]] auto width() const noexcept -> std::size_t { return shape_.width; }

    [[nodiscard]] auto operator()(std::size_t i, std::size_t j, std::size_t c) const -> value_type
    {
        return data_[(i * shape_.width + j) * kChannels + c];
    }
    auto operator()(std::size_t i, std::size_t j, std::size_t c) -> value_type&
    {
        return data_[(i * shape_.width + j) * kChannels + c];
    }

    /// The three channel values of the pixel with flat row-major index `p`.
    [[nodiscard]] auto pixel(std::size_t p) const -> std::span<const value_type, kChannels>
    {
        return std::span<const value_type, kChannels>(data_.data() + p * kChannels, kChannels);
    }
    auto pixel(std::size_t p) -> std::span<value_type, kChannels>
    {
        return std::span<value_type, kChannels>(data_.data() + p * kChannels, kChannels);
    }

    /// Largest absolute channel value of pixel `p`.
    [[nodiscard]] auto max_abs(std::size_t p) const -> int
    {
        auto const px = pixel(p);
        return std::max({std::abs(int{px[0]}), std::abs(int{px[1]}), std::abs(int{px[2]})});
    }

    [[nodiscard]] auto values() const noexcept -> std::span<const value_type> { return data_; }
    [[nodiscard]] auto values() noexcept -> std::span<value_type> { return data_; }

    [[nodiscard]] auto in_range() const noexcept -> bool
    {
        return std::all_of(data_.begin(), data_.end(), [](value_type v) {
            return v >= -kMaxPerturbation && v <= kMaxPerturbation;
        });
    }
    [[nodiscard]] auto is_zero() const noexcept -> bool
    {
        return std::all_of(data_.begin(), data_.end(), [](value_type v) { return v == 0; });
    }

    friend auto operator==(const FilterMask&, const FilterMask&) -> bool = default;

private:
    Shape shape_;
    std::vector<value_type> data_;
};

/// Per-pixel predicate of where a perturbation may be non-zero.
class RegionMask {
public:
    RegionMask() = default;
    RegionMask(Shape shape, bool allowed)
        : shape_(shape), allowed_(shape.pixels(), allowed ? 1 : 0)
    {
        detail::require_nonempty(shape_, "RegionMask");
    }

    static auto all(Shape shape) -> RegionMask { return {shape, true}; }
    static auto none(Shape shape) -> RegionMask { return {shape, false}; }

    /// Columns j >= floor(W/2) (zero-based); the middle column of an odd
    /// width belongs to the right half.
    static auto right_half(Shape shape) -> RegionMask
    {
        RegionMask r(shape, false);
        auto const first = shape.width / 2;
        for (std::size_t i = 0; i < shape.height; ++i) {
            for (std::size_t j = first; j < shape.width; ++j) {
                r.set(i, j, true);
            }
        }
        return r;
    }

    /// Complement of right_half.
    static auto left_half(Shape shape) -> RegionMask
    {
        RegionMask r(shape, false);
        auto const end = shape.width / 2;
        for (std::size_t i = 0; i < shape.height; ++i) {
            for (std::size_t j = 0; j < end; ++j) {
                r.set(i, j, true);
            }
        }
        return r;
    }

    [[nodiscard]] auto shape() const noexcept -> Shape { return shape_; }
    [[nodiscard]] auto allowed(std::size_t i, std::size_t j) const -> bool { return allowed_[i * shape_.width + j] != 0; }
    [[nodiscard]] auto allowed(std::size_t p) const -> bool { return allowed_[p] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { allowed_[i * shape_.width + j] = v ? 1 : 0; }

    /// Flat indices of allowed pixels, ascending.
    [[nodiscard]] auto allowed_pixels() const -> std::vector<std::size_t>
    {
        std::vector<std::size_t> out;
        for (std::size_t p = 0; p < allowed_.size(); ++p) {
            if (allowed_[p] != 0) {
                out.push_back(p);
            }
        }
        return out;
    }

    friend auto operator==(const RegionMask&, const RegionMask&) -> bool = default;

private:
    Shape shape_;
    std::vector<std::uint8_t> allowed_;
};

/// Saturating img + mask.
[[nodiscard]] inline auto apply_mask(const Image& img, const FilterMask& mask) -> Image
{
    require_same_shape(img.shape(), mask.shape(), "apply_mask");
    Image out = img;
    auto dst = out.data();
    auto const src = mask.values();
    for (std::size_t k = 0; k < dst.size(); ++k) {
        dst[k] = static_cast<std::uint8_t>(std::clamp(int{dst[k]} + int{src[k]}, 0, 255));
    }
    return out;
}

/// Zeroes every pixel the region does not allow.
[[nodiscard]] inline auto project_mask(const FilterMask& mask, const RegionMask& region) -> FilterMask
{
    require_same_shape(mask.shape(), region.shape(), "project_mask");
    FilterMask out = mask;
    for (std::size_t p = 0; p < mask.shape().pixels(); ++p) {
        if (!region.allowed(p)) {
            auto px = out.pixel(p);
            std::fill(px.begin(), px.end(), FilterMask::value_type{0});
        }
    }
    return out;
}

/// True iff every disallowed pixel of `mask` is zero and all values are in range.
[[nodiscard]] inline auto satisfies_region(const FilterMask& mask, const RegionMask& region) -> bool
{
    if (mask.shape() != region.shape() || !mask.in_range()) {
        return false;
    }
    for (std::size_t p = 0; p < mask.shape().pixels(); ++p) {
        if (!region.allowed(p) && mask.max_abs(p) != 0) {
            return false;
        }
    }
    return true;
}

} // namespace butterfly

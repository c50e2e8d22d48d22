#pragma once

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "butterfly/core/image.hpp"

namespace butterfly {

class PngError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
    struct FileCloser {
        void operator()(std::FILE* f) const noexcept { std::fclose(f); }
    };
    using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

    inline auto open_file(const std::filesystem::path& path, const char* mode) -> FilePtr
    {
        FilePtr f(std::fopen(path.c_str(), mode));
        if (!f) {
            throw PngError("cannot open " + path.string());
        }
        return f;
    }
    // libpng reports through these instead of printing to stderr.
    inline void on_png_error(png_structp png, png_const_charp message)
    {
        *static_cast<std::string*>(png_get_error_ptr(png)) = message;
        png_longjmp(png, 1);
    }
    inline void on_png_warning(png_structp, png_const_charp) {}
} // namespace detail

/// Reads any PNG as 8-bit RGB: palette and gray are expanded, 16-bit is
/// reduced and alpha is dropped.
[[nodiscard]] inline auto read_png(const std::filesystem::path& path) -> Image
{
    auto file = detail::open_file(path, "rb");
    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, detail::on_png_error, detail::on_png_warning);
    if (png == nullptr) {
        throw PngError("png_create_read_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw PngError("png_create_info_struct failed");
    }

    std::vector<std::uint8_t> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("cannot decode " + path.string() + ": " + message);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_uint_32 const width = png_get_image_width(png, info);
    png_uint_32 const height = png_get_image_height(png, info);
    auto const color = png_get_color_type(png, info);
    auto const depth = png_get_bit_depth(png, info);

    if (depth == 16) {
        png_set_strip_16(png);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if ((color & PNG_COLOR_MASK_ALPHA) != 0) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    data.resize(std::size_t{height} * width * kChannels);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) {
        rows[r] = data.data() + std::size_t{r} * width * kChannels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return {Shape{height, width}, std::move(data)};
}

/// Writes 8-bit RGB with fixed compression level and filter so output
/// bytes depend only on the pixels.
inline void write_png(const std::filesystem::path& path, const Image& img)
{
    auto file = detail::open_file(path, "wb");
    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, detail::on_png_error, detail::on_png_warning);
    if (png == nullptr) {
        throw PngError("png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("png_create_info_struct failed");
    }
    std::vector<png_bytep> rows(img.height());
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw PngError("cannot encode " + path.string() + ": " + message);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_write_info(png, info);
    // libpng takes non-const row pointers but does not write through them.
    auto* base = const_cast<std::uint8_t*>(img.data().data());
    for (std::size_t r = 0; r < img.height(); ++r) {
        rows[r] = base + r * img.width() * kChannels;
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace butterfly

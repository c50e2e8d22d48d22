#pragma once

// BFM1 filter-mask container:
//   "BFM1" | u32le height | u32le width | height*width*3 x i16le (row-major, RGB interleaved)

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "butterfly/core/image.hpp"

namespace butterfly {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
    inline void put_u32le(std::ostream& os, std::uint32_t v)
    {
        std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
        os.write(b.data(), b.size());
    }

    inline auto get_u32le(std::istream& is) -> std::uint32_t
    {
        std::array<unsigned char, 4> b{};
        if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) {
            throw FormatError("BFM1: truncated header");
        }
        return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    }
} // namespace detail

inline constexpr std::array<char, 4> kBfmMagic{'B', 'F', 'M', '1'};

inline void write_bfm(std::ostream& os, const FilterMask& mask)
{
    os.write(kBfmMagic.data(), kBfmMagic.size());
    detail::put_u32le(os, static_cast<std::uint32_t>(mask.height()));
    detail::put_u32le(os, static_cast<std::uint32_t>(mask.width()));
    auto const values = mask.values();
    std::vector<char> buf(values.size() * 2);
    for (std::size_t k = 0; k < values.size(); ++k) {
        auto const u = static_cast<std::uint16_t>(values[k]);
        buf[2 * k] = static_cast<char>(u & 0xFF);
        buf[2 * k + 1] = static_cast<char>(u >> 8);
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) {
        throw std::runtime_error("BFM1: write failed");
    }
}

[[nodiscard]] inline auto read_bfm(std::istream& is) -> FilterMask
{
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kBfmMagic) {
        throw FormatError("BFM1: bad magic");
    }
    auto const height = detail::get_u32le(is);
    auto const width = detail::get_u32le(is);
    if (height == 0 || width == 0) {
        throw FormatError("BFM1: empty shape");
    }
    auto const count = std::size_t{height} * width * kChannels;
    if (count > std::numeric_limits<std::streamsize>::max() / 2) {
        throw FormatError("BFM1: shape too large");
    }
    std::vector<unsigned char> buf(count * 2);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError("BFM1: truncated payload");
    }
    std::vector<FilterMask::value_type> values(count);
    for (std::size_t k = 0; k < count; ++k) {
        auto const u = static_cast<std::uint16_t>(buf[2 * k] | (buf[2 * k + 1] << 8));
        values[k] = static_cast<FilterMask::value_type>(u);
        if (values[k] < -kMaxPerturbation || values[k] > kMaxPerturbation) {
            throw FormatError("BFM1: value outside [-255, 255]");
        }
    }
    return {Shape{height, width}, std::move(values)};
}

inline void save_bfm(const std::filesystem::path& path, const FilterMask& mask)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_bfm(os, mask);
}

[[nodiscard]] inline auto load_bfm(const std::filesystem::path& path) -> FilterMask
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_bfm(is);
}

} // namespace butterfly

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "butterfly/core/image.hpp"
#include "butterfly/detectors/detector.hpp"
#include "butterfly/objectives.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::uint64_t counter = 0;
        path_ = fs::temp_directory_path() / ("butterfly_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    TempDir(const TempDir&) = delete;
    auto operator=(const TempDir&) -> TempDir& = delete;
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    [[nodiscard]] auto path() const -> const fs::path& { return path_; }

private:
    fs::path path_;
};

inline auto read_file(const fs::path& p) -> std::string
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

/// Mask with roughly `density` of its pixels set to random in-range values.
inline auto random_sparse_mask(butterfly::Shape shape, double density, std::mt19937_64& rng) -> butterfly::FilterMask
{
    butterfly::FilterMask m(shape);
    std::bernoulli_distribution on(density);
    std::uniform_int_distribution<int> value(-255, 255);
    for (std::size_t p = 0; p < shape.pixels(); ++p) {
        if (on(rng)) {
            for (auto& v : m.pixel(p)) {
                v = static_cast<butterfly::FilterMask::value_type>(value(rng));
            }
        }
    }
    return m;
}

inline auto random_objectives(std::size_t n, std::mt19937_64& rng, int levels) -> std::vector<butterfly::ObjectiveVector>
{
    // Coarse integer levels produce plenty of ties and duplicates.
    std::uniform_int_distribution<int> level(0, levels - 1);
    std::vector<butterfly::ObjectiveVector> out(n);
    for (auto& v : out) {
        v = {double(level(rng)), double(level(rng)) / levels, -double(level(rng))};
    }
    return out;
}

/// Detector defined by a lambda; declares itself safe for concurrent calls.
class FunctionDetector final : public butterfly::Detector {
public:
    using Fn = std::function<butterfly::DetectionSet(const butterfly::Image&)>;
    explicit FunctionDetector(Fn fn)
        : fn_(std::move(fn))
    {
    }
    [[nodiscard]] auto detect(const butterfly::Image& img) const -> butterfly::DetectionSet override { return fn_(img); }
    [[nodiscard]] auto concurrency() const noexcept -> butterfly::Concurrency override { return butterfly::Concurrency::safe; }
    [[nodiscard]] auto name() const -> std::string override { return "function"; }

private:
    Fn fn_;
};

/// Number of pixels whose triple differs between two masks.
inline auto changed_pixels(const butterfly::FilterMask& a, const butterfly::FilterMask& b) -> std::size_t
{
    std::size_t n = 0;
    for (std::size_t p = 0; p < a.shape().pixels(); ++p) {
        auto const x = a.pixel(p);
        auto const y = b.pixel(p);
        n += (x[0] != y[0] || x[1] != y[1] || x[2] != y[2]) ? 1 : 0;
    }
    return n;
}

} // namespace testing_support

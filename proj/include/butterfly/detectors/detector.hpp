#pragma once

#include <string>

#include "butterfly/core/box.hpp"
#include "butterfly/core/image.hpp"

namespace butterfly {

/// Whether `Detector::detect` may be called from several threads at once.
enum class Concurrency {
    safe,
    serialize,
};

/// Object detector oracle f: Image -> DetectionSet. Implementations must be
/// deterministic for the lifetime of a run.
class Detector {
public:
    Detector() = default;
    Detector(const Detector&) = delete;
    auto operator=(const Detector&) -> Detector& = delete;
    virtual ~Detector() = default;

    [[nodiscard]] virtual auto detect(const Image& img) const -> DetectionSet = 0;
    [[nodiscard]] virtual auto concurrency() const noexcept -> Concurrency { return Concurrency::serialize; }
    [[nodiscard]] virtual auto name() const -> std::string = 0;
};

} // namespace butterfly

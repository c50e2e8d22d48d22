#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "butterfly/detectors/detector.hpp"

namespace butterfly {

/// Parameters of the threshold-and-components detector. The effective
/// threshold is `theta + alpha * (global_mean - m0)`, so pixels far from an
/// object still move its detection through the global mean.
struct SyntheticDetectorConfig {
    double theta = 200.0;
    double alpha = 1.5;
    double m0 = 96.0;
    std::size_t min_area = 9;

    void validate() const
    {
        if (!(theta >= 0.0 && theta <= 255.0)) {
            throw std::invalid_argument("synthetic detector: theta must be in [0, 255]");
        }
        if (!(alpha >= 0.0)) {
            throw std::invalid_argument("synthetic detector: alpha must be >= 0");
        }
        if (min_area < 1) {
            throw std::invalid_argument("synthetic detector: min_area must be >= 1");
        }
    }

    friend auto operator==(const SyntheticDetectorConfig&, const SyntheticDetectorConfig&) -> bool = default;
};

[[nodiscard]] inline auto global_mean(const Image& img) -> double
{
    auto const data = img.data();
    auto const sum = std::accumulate(data.begin(), data.end(), std::uint64_t{0});
    return static_cast<double>(sum) / static_cast<double>(data.size());
}

[[nodiscard]] inline auto effective_threshold(const Image& img, const SyntheticDetectorConfig& cfg) -> double
{
    return std::clamp(cfg.theta + cfg.alpha * (global_mean(img) - cfg.m0), 0.0, 255.0);
}

[[nodiscard]] inline auto synthetic_detect(const Image& img, const SyntheticDetectorConfig& cfg) -> DetectionSet
{
    auto const t = effective_threshold(img, cfg);
    auto const height = img.height();
    auto const width = img.width();
    auto const n = height * width;

    // Per-pixel class: argmax channel (ties to the lowest index) if it reaches t.
    std::vector<ClassLabel> label(n, kNoObject);
    for (std::size_t i = 0; i < height; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < kChannels; ++c) {
                if (img(i, j, c) > img(i, j, best)) {
                    best = c;
                }
            }
            if (static_cast<double>(img(i, j, best)) >= t) {
                label[i * width + j] = static_cast<ClassLabel>(best + 1);
            }
        }
    }

    DetectionSet boxes;
    std::vector<std::uint8_t> seen(n, 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (label[start] == kNoObject || seen[start] != 0) {
            continue;
        }
        auto const cl = label[start];
        std::size_t count = 0;
        std::size_t min_i = height;
        std::size_t max_i = 0;
        std::size_t min_j = width;
        std::size_t max_j = 0;
        seen[start] = 1;
        stack.assign(1, start);
        while (!stack.empty()) {
            auto const p = stack.back();
            stack.pop_back();
            auto const i = p / width;
            auto const j = p % width;
            ++count;
            min_i = std::min(min_i, i);
            max_i = std::max(max_i, i);
            min_j = std::min(min_j, j);
            max_j = std::max(max_j, j);
            auto visit = [&](std::size_t q) {
                if (label[q] == cl && seen[q] == 0) {
                    seen[q] = 1;
                    stack.push_back(q);
                }
            };
            if (i > 0) {
                visit(p - width);
            }
            if (i + 1 < height) {
                visit(p + width);
            }
            if (j > 0) {
                visit(p - 1);
            }
            if (j + 1 < width) {
                visit(p + 1);
            }
        }
        if (count < cfg.min_area) {
            continue;
        }
        boxes.push_back(BoundingBox{
            cl,
            (static_cast<double>(min_i) + static_cast<double>(max_i)) / 2.0,
            (static_cast<double>(min_j) + static_cast<double>(max_j)) / 2.0,
            static_cast<double>(max_i - min_i + 1),
            static_cast<double>(max_j - min_j + 1),
        });
    }
    std::sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
        return std::tie(a.cl, a.x, a.y) < std::tie(b.cl, b.x, b.y);
    });
    return boxes;
}

class SyntheticDetector final : public Detector {
public:
    explicit SyntheticDetector(SyntheticDetectorConfig cfg = {})
        : cfg_(cfg)
    {
        cfg_.validate();
    }

    [[nodiscard]] auto detect(const Image& img) const -> DetectionSet override { return synthetic_detect(img, cfg_); }
    [[nodiscard]] auto concurrency() const noexcept -> Concurrency override { return Concurrency::safe; }
    [[nodiscard]] auto name() const -> std::string override { return "synthetic"; }
    [[nodiscard]] auto config() const noexcept -> const SyntheticDetectorConfig& { return cfg_; }

private:
    SyntheticDetectorConfig cfg_;
};

} // namespace butterfly

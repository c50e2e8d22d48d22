#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "butterfly/core/box.hpp"
#include "butterfly/core/image.hpp"
#include "butterfly/detectors/detector.hpp"

namespace butterfly {

/// The three attack objectives, all oriented for minimization.
struct ObjectiveVector {
    double intensity = 0.0;
    double degrad = 1.0;
    /// Negated distance objective.
    double neg_dist = 0.0;

    [[nodiscard]] constexpr auto dist() const noexcept -> double { return -neg_dist; }
    [[nodiscard]] constexpr auto as_array() const noexcept -> std::array<double, 3> { return {intensity, degrad, neg_dist}; }

    friend constexpr auto operator==(const ObjectiveVector&, const ObjectiveVector&) -> bool = default;
};

inline constexpr std::size_t kObjectiveCount = 3;

struct DistParams {
    /// Margin in pixels added on every side of a box when penalizing nearby perturbation.
    double epsilon = 5.0;

    void validate() const
    {
        if (!(epsilon >= 0.0)) {
            throw std::invalid_argument("dist params: epsilon must be >= 0");
        }
    }
};

/// L2 norm over every entry of the mask.
[[nodiscard]] inline auto obj_intensity(const FilterMask& mask) -> double
{
    double sum = 0.0;
    for (auto v : mask.values()) {
        sum += static_cast<double>(v) * static_cast<double>(v);
    }
    return std::sqrt(sum);
}

/// Mean over valid original boxes of the best same-class IoU among the
/// perturbed boxes. 1 when the original prediction holds no valid box.
[[nodiscard]] inline auto obj_degrad(const DetectionSet& original, const DetectionSet& perturbed) -> double
{
    double total = 0.0;
    std::size_t valid = 0;
    for (const auto& b : original) {
        if (!b.valid()) {
            continue;
        }
        ++valid;
        double best = 0.0;
        for (const auto& p : perturbed) {
            if (p.cl == b.cl) {
                best = std::max(best, iou(b, p));
            }
        }
        total += best;
    }
    if (valid == 0) {
        return 1.0;
    }
    return total / static_cast<double>(valid);
}

[[nodiscard]] inline auto obj_degrad(const Image& img, const FilterMask& mask, const Detector& f) -> double
{
    require_same_shape(img.shape(), mask.shape(), "obj_degrad");
    return obj_degrad(f.detect(img), f.detect(apply_mask(img, mask)));
}

/// Per-pixel weights of the distance objective for one original prediction.
/// Outside every eps-dilated valid box a pixel weighs its distance to the
/// nearest box center (capped at the image diagonal); inside, it weighs the
/// negated mean of those distances. The field does not depend on the mask,
/// so it is built once per baseline and scored against many masks.
class DistanceField {
public:
    DistanceField(Shape shape, const DetectionSet& original, DistParams params)
        : shape_(shape), weight_(shape.pixels())
    {
        params.validate();
        auto const diagonal = std::hypot(static_cast<double>(shape.height), static_cast<double>(shape.width));
        std::vector<const BoundingBox*> valid;
        for (const auto& b : original) {
            if (b.valid()) {
                valid.push_back(&b);
            }
        }

        double sum = 0.0;
        for (std::size_t i = 0; i < shape.height; ++i) {
            for (std::size_t j = 0; j < shape.width; ++j) {
                double d = diagonal;
                for (const auto* b : valid) {
                    d = std::min(d, std::hypot(b->x - static_cast<double>(i), b->y - static_cast<double>(j)));
                }
                weight_[i * shape.width + j] = d;
                sum += d;
            }
        }
        auto const penalty = -sum / static_cast<double>(shape.pixels());

        auto const eps = params.epsilon;
        for (const auto* b : valid) {
            auto const i_lo = std::max(0.0, std::ceil(b->min_x() - eps));
            auto const i_hi = std::min(static_cast<double>(shape.height) - 1.0, std::floor(b->max_x() + eps));
            auto const j_lo = std::max(0.0, std::ceil(b->min_y() - eps));
            auto const j_hi = std::min(static_cast<double>(shape.width) - 1.0, std::floor(b->max_y() + eps));
            for (auto i = i_lo; i <= i_hi; i += 1.0) {
                for (auto j = j_lo; j <= j_hi; j += 1.0) {
                    weight_[static_cast<std::size_t>(i) * shape.width + static_cast<std::size_t>(j)] = penalty;
                }
            }
        }
    }

    [[nodiscard]] auto shape() const noexcept -> Shape { return shape_; }
    [[nodiscard]] auto weight(std::size_t i, std::size_t j) const -> double { return weight_[i * shape_.width + j]; }

    /// Sum of weight times largest absolute channel perturbation, divided by
    /// the number of perturbed pixels; 0 for an all-zero mask.
    [[nodiscard]] auto score(const FilterMask& mask) const -> double
    {
        require_same_shape(shape_, mask.shape(), "obj_dist");
        double sum = 0.0;
        std::size_t perturbed = 0;
        for (std::size_t p = 0; p < shape_.pixels(); ++p) {
            auto const m = mask.max_abs(p);
            if (m != 0) {
                sum += static_cast<double>(m) * weight_[p];
                ++perturbed;
            }
        }
        if (perturbed == 0) {
            return 0.0;
        }
        return sum / static_cast<double>(perturbed);
    }

private:
    Shape shape_;
    std::vector<double> weight_;
};

[[nodiscard]] inline auto obj_dist(Shape shape, const DetectionSet& original, const FilterMask& mask, DistParams params) -> double
{
    return DistanceField(shape, original, params).score(mask);
}

[[nodiscard]] inline auto obj_dist(const Image& img, const FilterMask& mask, const Detector& f, DistParams params) -> double
{
    require_same_shape(img.shape(), mask.shape(), "obj_dist");
    return obj_dist(img.shape(), f.detect(img), mask, params);
}

class RegionViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Objective evaluation for a fixed attack: frames x detectors with cached
/// baselines. degrad and neg_dist are averaged uniformly over every
/// (detector, frame) pair; intensity is the single L2 norm of the mask.
class AttackProblem {
public:
    AttackProblem(std::vector<Image> frames, std::vector<std::shared_ptr<const Detector>> detectors, RegionMask region,
                  DistParams params)
        : frames_(std::move(frames)), detectors_(std::move(detectors)), region_(std::move(region))
    {
        if (frames_.empty()) {
            throw std::invalid_argument("AttackProblem: at least one frame is required");
        }
        if (detectors_.empty()) {
            throw std::invalid_argument("AttackProblem: at least one detector is required");
        }
        params.validate();
        for (const auto& frame : frames_) {
            require_same_shape(frames_.front().shape(), frame.shape(), "AttackProblem frames");
        }
        require_same_shape(frames_.front().shape(), region_.shape(), "AttackProblem region");
        for (const auto& det : detectors_) {
            if (!det) {
                throw std::invalid_argument("AttackProblem: null detector");
            }
            for (const auto& frame : frames_) {
                auto boxes = det->detect(frame);
                fields_.emplace_back(frame.shape(), boxes, params);
                baselines_.push_back(std::move(boxes));
            }
        }
    }

    [[nodiscard]] auto shape() const noexcept -> Shape { return frames_.front().shape(); }
    [[nodiscard]] auto region() const noexcept -> const RegionMask& { return region_; }
    [[nodiscard]] auto frames() const noexcept -> const std::vector<Image>& { return frames_; }
    [[nodiscard]] auto detector_count() const noexcept -> std::size_t { return detectors_.size(); }

    [[nodiscard]] auto baseline(std::size_t detector, std::size_t frame) const -> const DetectionSet&
    {
        return baselines_.at(detector * frames_.size() + frame);
    }

    /// True iff every detector tolerates concurrent `detect` calls.
    [[nodiscard]] auto concurrent_safe() const noexcept -> bool
    {
        return std::all_of(detectors_.begin(), detectors_.end(),
                           [](const auto& d) { return d->concurrency() == Concurrency::safe; });
    }

    [[nodiscard]] auto operator()(const FilterMask& mask) const -> ObjectiveVector
    {
        require_same_shape(shape(), mask.shape(), "AttackProblem");
        if (!satisfies_region(mask, region_)) {
            throw RegionViolation("AttackProblem: mask perturbs pixels outside the allowed region");
        }
        double degrad = 0.0;
        double dist = 0.0;
        for (std::size_t k = 0; k < detectors_.size(); ++k) {
            for (std::size_t t = 0; t < frames_.size(); ++t) {
                auto const slot = k * frames_.size() + t;
                auto const perturbed = detectors_[k]->detect(apply_mask(frames_[t], mask));
                degrad += obj_degrad(baselines_[slot], perturbed);
                dist += fields_[slot].score(mask);
            }
        }
        auto const n = static_cast<double>(detectors_.size() * frames_.size());
        return ObjectiveVector{obj_intensity(mask), degrad / n, -(dist / n)};
    }

private:
    std::vector<Image> frames_;
    std::vector<std::shared_ptr<const Detector>> detectors_;
    RegionMask region_;
    std::vector<DetectionSet> baselines_;
    std::vector<DistanceField> fields_;
};

namespace detail {
    // Non-owning shared_ptr views for callers holding plain references.
    inline auto borrow(std::span<const Detector* const> detectors) -> std::vector<std::shared_ptr<const Detector>>
    {
        std::vector<std::shared_ptr<const Detector>> out;
        out.reserve(detectors.size());
        for (const auto* d : detectors) {
            out.emplace_back(std::shared_ptr<const Detector>{}, d);
        }
        return out;
    }
} // namespace detail

/// Ensemble objectives of one image under K detectors sharing one mask.
[[nodiscard]] inline auto evaluate(const Image& img, const FilterMask& mask, std::span<const Detector* const> detectors,
                                   const RegionMask& region, DistParams params) -> ObjectiveVector
{
    if (detectors.empty()) {
        throw std::invalid_argument("evaluate: detector list is empty");
    }
    require_same_shape(img.shape(), mask.shape(), "evaluate");
    return AttackProblem({img}, detail::borrow(detectors), region, params)(mask);
}

/// Objectives of one mask over a frame sequence under one detector.
[[nodiscard]] inline auto evaluate_temporal(std::span<const Image> frames, const FilterMask& mask, const Detector& f,
                                            const RegionMask& region, DistParams params) -> ObjectiveVector
{
    if (frames.empty()) {
        throw std::invalid_argument("evaluate_temporal: frame list is empty");
    }
    const Detector* const one[] = {&f};
    return AttackProblem({frames.begin(), frames.end()}, detail::borrow(one), region, params)(mask);
}

} // namespace butterfly

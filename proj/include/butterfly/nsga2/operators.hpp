#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "butterfly/core/image.hpp"
#include "butterfly/nsga2/config.hpp"
#include "butterfly/nsga2/rng.hpp"
#include "butterfly/nsga2/sorting.hpp"

namespace butterfly {

// ---------------------------------------------------------------------------
// Selection

/// Pareto-sorted binary tournament: two distinct individuals, lower rank
/// wins, then larger crowding distance, then a coin flip.
[[nodiscard]] inline auto binary_tournament(std::span<const Individual> pop, Rng& rng) -> std::size_t
{
    if (pop.size() < 2) {
        throw std::invalid_argument("binary_tournament: population must hold at least two individuals");
    }
    auto const a = uniform_index(rng, pop.size());
    auto b = uniform_index(rng, pop.size() - 1);
    if (b >= a) {
        ++b;
    }
    const auto& x = pop[a];
    const auto& y = pop[b];
    if (!x.rank || !y.rank || !x.crowding || !y.crowding) {
        throw std::logic_error("binary_tournament: rank and crowding must be assigned");
    }
    if (*x.rank != *y.rank) {
        return *x.rank < *y.rank ? a : b;
    }
    if (*x.crowding != *y.crowding) {
        return *x.crowding > *y.crowding ? a : b;
    }
    return bernoulli(rng, 0.5) ? a : b;
}

// ---------------------------------------------------------------------------
// Crossover

/// Offspring take the pixels [0, k) of one parent and [k, L*W) of the other.
[[nodiscard]] inline auto crossover_at(const FilterMask& a, const FilterMask& b, std::size_t k) -> std::pair<FilterMask, FilterMask>
{
    require_same_shape(a.shape(), b.shape(), "crossover");
    if (k > a.shape().pixels()) {
        throw std::out_of_range("crossover: cut point beyond the last pixel");
    }
    FilterMask first = a;
    FilterMask second = b;
    auto const cut = static_cast<std::ptrdiff_t>(k * kChannels);
    auto const av = a.values();
    auto const bv = b.values();
    std::copy(bv.begin() + cut, bv.end(), first.values().begin() + cut);
    std::copy(av.begin() + cut, av.end(), second.values().begin() + cut);
    return {std::move(first), std::move(second)};
}

[[nodiscard]] inline auto one_point_crossover(const FilterMask& a, const FilterMask& b, Rng& rng) -> std::pair<FilterMask, FilterMask>
{
    require_same_shape(a.shape(), b.shape(), "crossover");
    return crossover_at(a, b, uniform_index(rng, a.shape().pixels()));
}

// ---------------------------------------------------------------------------
// Mutation

enum class MutationOp : std::uint8_t {
    negate,
    shuffle,
    randomize,
    flip,
};

inline constexpr std::array kMutationOps{MutationOp::negate, MutationOp::shuffle, MutationOp::randomize, MutationOp::flip};

enum class FlipAxis : std::uint8_t {
    horizontal,
    vertical,
    both,
};

/// Largest number of pixels one mutation may change: ceil(fraction * L * W).
[[nodiscard]] inline auto mutation_budget(Shape shape, double window_fraction) -> std::size_t
{
    // The relative slack keeps products like 0.01 * 100 from rounding up past an integer.
    auto const raw = window_fraction * static_cast<double>(shape.pixels());
    auto const budget = static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
    return std::clamp<std::size_t>(budget, 1, shape.pixels());
}

inline void negate_pixels(FilterMask& mask, std::span<const std::size_t> pixels)
{
    for (auto p : pixels) {
        for (auto& v : mask.pixel(p)) {
            v = static_cast<FilterMask::value_type>(-v);
        }
    }
}

inline void shuffle_pixels(FilterMask& mask, std::span<const std::size_t> pixels, Rng& rng)
{
    using Triple = std::array<FilterMask::value_type, kChannels>;
    std::vector<Triple> triples;
    triples.reserve(pixels.size());
    for (auto p : pixels) {
        auto const px = mask.pixel(p);
        triples.push_back({px[0], px[1], px[2]});
    }
    std::shuffle(triples.begin(), triples.end(), rng);
    for (std::size_t k = 0; k < pixels.size(); ++k) {
        std::copy(triples[k].begin(), triples[k].end(), mask.pixel(pixels[k]).begin());
    }
}

inline void randomize_pixels(FilterMask& mask, std::span<const std::size_t> pixels, Rng& rng)
{
    std::uniform_int_distribution<int> value(-kMaxPerturbation, kMaxPerturbation);
    for (auto p : pixels) {
        for (auto& v : mask.pixel(p)) {
            v = static_cast<FilterMask::value_type>(value(rng));
        }
    }
}

/// Mirrors the rows [top, top+rows) x columns [left, left+cols) in place.
inline void flip_window(FilterMask& mask, std::size_t top, std::size_t left, std::size_t rows, std::size_t cols, FlipAxis axis)
{
    if (top + rows > mask.height() || left + cols > mask.width()) {
        throw std::out_of_range("flip_window: window exceeds the mask");
    }
    auto const original = mask;
    auto const mirror_cols = axis != FlipAxis::vertical;
    auto const mirror_rows = axis != FlipAxis::horizontal;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            auto const sr = mirror_rows ? rows - 1 - r : r;
            auto const sc = mirror_cols ? cols - 1 - c : c;
            for (std::size_t ch = 0; ch < kChannels; ++ch) {
                mask(top + r, left + c, ch) = original(top + sr, left + sc, ch);
            }
        }
    }
}

namespace detail {
    inline auto sample_pixels(std::span<const std::size_t> allowed, std::size_t budget, Rng& rng) -> std::vector<std::size_t>
    {
        auto const count = 1 + uniform_index(rng, std::min(budget, allowed.size()));
        std::vector<std::size_t> chosen;
        chosen.reserve(count);
        std::sample(allowed.begin(), allowed.end(), std::back_inserter(chosen), count, rng);
        return chosen;
    }

    inline auto window_allowed(const RegionMask& region, std::size_t top, std::size_t left, std::size_t rows, std::size_t cols) -> bool
    {
        for (std::size_t r = top; r < top + rows; ++r) {
            for (std::size_t c = left; c < left + cols; ++c) {
                if (!region.allowed(r, c)) {
                    return false;
                }
            }
        }
        return true;
    }

    inline void flip_random_window(FilterMask& mask, const RegionMask& region, std::span<const std::size_t> allowed,
                                   std::size_t budget, Rng& rng)
    {
        constexpr int kAttempts = 16;
        auto const width = mask.width();
        auto const height = mask.height();
        for (int attempt = 0; attempt < kAttempts; ++attempt) {
            auto const anchor = allowed[uniform_index(rng, allowed.size())];
            auto const top = anchor / width;
            auto const left = anchor % width;
            auto const rows = 1 + uniform_index(rng, std::min(budget, height - top));
            auto const cols = 1 + uniform_index(rng, std::min(budget / rows, width - left));
            if (!window_allowed(region, top, left, rows, cols)) {
                continue;
            }
            auto const axis = static_cast<FlipAxis>(uniform_index(rng, 3));
            flip_window(mask, top, left, rows, cols, axis);
            return;
        }
    }
} // namespace detail

/// Applies one mutation operator to at most `budget` allowed pixels. The
/// result is re-projected onto the region.
[[nodiscard]] inline auto apply_mutation(const FilterMask& mask, const RegionMask& region, MutationOp op,
                                         std::size_t budget, Rng& rng) -> FilterMask
{
    require_same_shape(mask.shape(), region.shape(), "mutate");
    auto const allowed = region.allowed_pixels();
    if (allowed.empty() || budget == 0) {
        return mask;
    }
    FilterMask out = mask;
    switch (op) {
    case MutationOp::negate:
        negate_pixels(out, detail::sample_pixels(allowed, budget, rng));
        break;
    case MutationOp::shuffle:
        shuffle_pixels(out, detail::sample_pixels(allowed, budget, rng), rng);
        break;
    case MutationOp::randomize:
        randomize_pixels(out, detail::sample_pixels(allowed, budget, rng), rng);
        break;
    case MutationOp::flip:
        detail::flip_random_window(out, region, allowed, budget, rng);
        break;
    }
    return project_mask(out, region);
}

/// With probability p_m applies one uniformly chosen operator.
[[nodiscard]] inline auto mutate(const FilterMask& mask, const RegionMask& region, const GaConfig& cfg, Rng& rng) -> FilterMask
{
    require_same_shape(mask.shape(), region.shape(), "mutate");
    if (!bernoulli(rng, cfg.p_m)) {
        return mask;
    }
    auto const op = kMutationOps[uniform_index(rng, kMutationOps.size())];
    return apply_mutation(mask, region, op, mutation_budget(mask.shape(), cfg.window_fraction), rng);
}

// ---------------------------------------------------------------------------
// Initialization

enum class NoiseKind : std::uint8_t {
    salt_and_pepper,
    speckle,
    uniform,
};

namespace detail {
    inline auto clamp_value(double v) -> FilterMask::value_type
    {
        return static_cast<FilterMask::value_type>(std::clamp(std::lround(v), long{-kMaxPerturbation}, long{kMaxPerturbation}));
    }
} // namespace detail

/// Classic image-noise transforms applied on top of a Gaussian mask.
inline void apply_noise(FilterMask& mask, NoiseKind kind, Rng& rng)
{
    switch (kind) {
    case NoiseKind::salt_and_pepper: {
        auto const n = mask.shape().pixels();
        auto const count = mutation_budget(mask.shape(), 0.01);
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::vector<std::size_t> chosen;
        std::sample(all.begin(), all.end(), std::back_inserter(chosen), count, rng);
        for (auto p : chosen) {
            auto const v = static_cast<FilterMask::value_type>(bernoulli(rng, 0.5) ? kMaxPerturbation : -kMaxPerturbation);
            auto px = mask.pixel(p);
            std::fill(px.begin(), px.end(), v);
        }
        break;
    }
    case NoiseKind::speckle: {
        std::normal_distribution<double> gain(0.0, 0.5);
        for (auto& v : mask.values()) {
            v = detail::clamp_value(static_cast<double>(v) * (1.0 + gain(rng)));
        }
        break;
    }
    case NoiseKind::uniform: {
        std::uniform_int_distribution<int> add(-8, 8);
        for (auto& v : mask.values()) {
            v = detail::clamp_value(static_cast<double>(v + add(rng)));
        }
        break;
    }
    }
}

/// Rounded N(0, sigma) per entry, then with probability 1/2 one noise
/// transform, projected onto the region.
[[nodiscard]] inline auto random_mask(Shape shape, const RegionMask& region, double sigma, Rng& rng) -> FilterMask
{
    require_same_shape(shape, region.shape(), "random_mask");
    FilterMask mask(shape);
    if (sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, sigma);
        for (auto& v : mask.values()) {
            v = detail::clamp_value(gauss(rng));
        }
    }
    if (bernoulli(rng, 0.5)) {
        apply_noise(mask, static_cast<NoiseKind>(uniform_index(rng, 3)), rng);
    }
    return project_mask(mask, region);
}

/// population_size - 1 random masks followed by one all-zero mask. Mask k
/// draws from its own stream, so the population is a function of the seed.
[[nodiscard]] inline auto init_population(Shape shape, const RegionMask& region, const GaConfig& cfg) -> std::vector<FilterMask>
{
    cfg.validate();
    std::vector<FilterMask> out;
    out.reserve(cfg.population_size);
    for (std::size_t k = 0; k + 1 < cfg.population_size; ++k) {
        auto rng = make_stream(cfg.rng_seed, Stream::initialization, k);
        out.push_back(random_mask(shape, region, cfg.init_sigma, rng));
    }
    out.emplace_back(shape);
    return out;
}

} // namespace butterfly

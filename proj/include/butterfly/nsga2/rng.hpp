#pragma once

#include <cstdint>
#include <random>

namespace butterfly {

using Rng = std::mt19937_64;

/// Independent random streams derived from the run seed. Each consumer of
/// randomness gets its own stream keyed by (purpose, a, b), so the draws of
/// one individual never depend on how many draws another one made.
enum class Stream : std::uint32_t {
    initialization = 1,
    selection = 2,
    variation = 3,
};

[[nodiscard]] inline auto make_stream(std::uint64_t seed, Stream purpose, std::uint64_t a = 0, std::uint64_t b = 0) -> Rng
{
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xFFFFFFFFu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), static_cast<std::uint32_t>(purpose), lo(a), hi(a), lo(b), hi(b)};
    return Rng(seq);
}

[[nodiscard]] inline auto uniform_index(Rng& rng, std::size_t n) -> std::size_t
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

[[nodiscard]] inline auto bernoulli(Rng& rng, double p) -> bool
{
    return std::bernoulli_distribution(p)(rng);
}

} // namespace butterfly

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "butterfly/core/image.hpp"
#include "butterfly/objectives.hpp"

namespace butterfly {

/// Pareto dominance, all objectives minimized.
[[nodiscard]] constexpr auto dominates(const ObjectiveVector& a, const ObjectiveVector& b) noexcept -> bool
{
    auto const x = a.as_array();
    auto const y = b.as_array();
    bool strictly = false;
    for (std::size_t m = 0; m < kObjectiveCount; ++m) {
        if (x[m] > y[m]) {
            return false;
        }
        strictly = strictly || x[m] < y[m];
    }
    return strictly;
}

struct Individual {
    std::uint64_t id = 0;
    std::shared_ptr<const FilterMask> genome;
    ObjectiveVector objectives;
    std::optional<std::size_t> rank;
    std::optional<double> crowding;
};

/// Fronts as index lists into the sorted points; `rank[i]` is 1-based.
struct Fronts {
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> rank;
};

/// Deb's fast non-dominated sort. Front members are listed in ascending
/// index order.
[[nodiscard]] inline auto fast_nondominated_sort(std::span<const ObjectiveVector> points) -> Fronts
{
    auto const n = points.size();
    Fronts out;
    out.rank.assign(n, 0);
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominators(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(points[p], points[q])) {
                dominated[p].push_back(q);
                ++dominators[q];
            } else if (dominates(points[q], points[p])) {
                dominated[q].push_back(p);
                ++dominators[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (dominators[p] == 0) {
            current.push_back(p);
        }
    }
    std::size_t r = 1;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            out.rank[p] = r;
            for (auto q : dominated[p]) {
                if (--dominators[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        out.fronts.push_back(std::move(current));
        current = std::move(next);
        ++r;
    }
    return out;
}

/// Crowding distance of each member of `front` (indices into `points`).
/// Boundary members of every objective get +inf; interior members sum the
/// normalized gap between their neighbours; a flat objective adds 0.
[[nodiscard]] inline auto crowding_distance(std::span<const ObjectiveVector> points, std::span<const std::size_t> front)
    -> std::vector<double>
{
    auto const n = front.size();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
        return distance;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < kObjectiveCount; ++m) {
        auto value = [&](std::size_t k) { return points[front[k]].as_array()[m]; };
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
        auto const lo = value(order.front());
        auto const hi = value(order.back());
        distance[order.front()] = std::numeric_limits<double>::infinity();
        distance[order.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo)) {
            continue;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            distance[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / (hi - lo);
        }
    }
    return distance;
}

[[nodiscard]] inline auto crowding_distance(std::span<const ObjectiveVector> front) -> std::vector<double>
{
    std::vector<std::size_t> all(front.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return crowding_distance(front, all);
}

[[nodiscard]] inline auto objectives_of(std::span<const Individual> pop) -> std::vector<ObjectiveVector>
{
    std::vector<ObjectiveVector> out;
    out.reserve(pop.size());
    for (const auto& ind : pop) {
        out.push_back(ind.objectives);
    }
    return out;
}

/// Sets rank and crowding on every individual of `pop`.
inline auto assign_rank_and_crowding(std::span<Individual> pop) -> Fronts
{
    auto const points = objectives_of(pop);
    auto fronts = fast_nondominated_sort(points);
    for (const auto& front : fronts.fronts) {
        auto const crowd = crowding_distance(points, front);
        for (std::size_t k = 0; k < front.size(); ++k) {
            pop[front[k]].rank = fronts.rank[front[k]];
            pop[front[k]].crowding = crowd[k];
        }
    }
    return fronts;
}

} // namespace butterfly

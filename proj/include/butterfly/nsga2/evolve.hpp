#pragma once

#include <algorithm>
#include <atomic>
#include <concepts>
#include <exception>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "butterfly/nsga2/archive.hpp"
#include "butterfly/nsga2/config.hpp"
#include "butterfly/nsga2/operators.hpp"
#include "butterfly/nsga2/rng.hpp"
#include "butterfly/nsga2/sorting.hpp"

namespace butterfly {

template <class P>
concept MaskProblem = requires(const P& p, const FilterMask& m) {
    { p(m) } -> std::convertible_to<ObjectiveVector>;
};

/// Thrown when an evaluation fails mid-run; carries every generation
/// archived before the failure.
class EvolutionAborted : public std::runtime_error {
public:
    EvolutionAborted(const std::string& what, ParetoArchive partial, std::exception_ptr cause)
        : std::runtime_error(what), partial_(std::move(partial)), cause_(std::move(cause))
    {
    }

    [[nodiscard]] auto partial() const noexcept -> const ParetoArchive& { return partial_; }
    [[nodiscard]] auto cause() const noexcept -> std::exception_ptr { return cause_; }

private:
    ParetoArchive partial_;
    std::exception_ptr cause_;
};

using GenerationObserver = std::function<void(const GenerationFront&, std::span<const Individual>)>;

struct EvolveOptions {
    /// Called after each generation is archived, with the whole population.
    GenerationObserver on_generation;
    /// Keep genomes of every archived generation instead of only the latest.
    bool keep_genome_history = false;
};

/// Evaluates every individual of `pop`, fanning out over `workers` threads.
/// On failure the exception of the lowest failing index is rethrown.
template <MaskProblem Problem>
void evaluate_population(const Problem& problem, std::span<Individual> pop, std::size_t workers)
{
    std::vector<std::exception_ptr> errors(pop.size());
    auto run = [&](std::size_t k) {
        try {
            pop[k].objectives = problem(*pop[k].genome);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(pop.size(), 1));
    if (workers == 1) {
        for (std::size_t k = 0; k < pop.size(); ++k) {
            run(k);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            threads.emplace_back([&] {
                for (auto k = next.fetch_add(1); k < pop.size(); k = next.fetch_add(1)) {
                    run(k);
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

/// (mu + lambda) truncation: whole fronts by ascending rank, the last
/// admitted front cut by descending crowding distance. Ties keep pool order.
[[nodiscard]] inline auto select_survivors(std::span<const Individual> pool, std::size_t count) -> std::vector<Individual>
{
    auto const points = objectives_of(pool);
    auto const sorted = fast_nondominated_sort(points);
    std::vector<Individual> next;
    next.reserve(count);
    for (const auto& front : sorted.fronts) {
        if (next.size() == count) {
            break;
        }
        if (next.size() + front.size() <= count) {
            for (auto k : front) {
                next.push_back(pool[k]);
            }
            continue;
        }
        auto const crowd = crowding_distance(points, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
        for (std::size_t k = 0; next.size() < count; ++k) {
            next.push_back(pool[front[order[k]]]);
        }
    }
    return next;
}

/// Customized NSGA-II over filter masks. Generation 0 is the evaluated
/// initial population; each of `cfg.iterations` further generations breeds
/// population_size offspring (tournament, crossover with p_c or cloning,
/// mutation) and keeps the best population_size of parents plus offspring.
/// The rank-1 front of every generation is archived.
///
/// All randomness comes from streams keyed by (seed, generation, pair), and
/// evaluation is the only parallel step, so the archive is a function of
/// the seed alone.
template <MaskProblem Problem>
[[nodiscard]] auto evolve(const Problem& problem, Shape shape, const RegionMask& region, const GaConfig& cfg,
                          const EvolveOptions& options = {}) -> ParetoArchive
{
    cfg.validate();
    require_same_shape(shape, region.shape(), "evolve");
    auto workers = cfg.workers;
    if constexpr (requires { problem.concurrent_safe(); }) {
        if (!problem.concurrent_safe()) {
            workers = 1;
        }
    }

    ParetoArchive archive;
    std::uint64_t next_id = 0;
    auto const n = cfg.population_size;

    auto archive_generation = [&](std::size_t generation, std::span<const Individual> pop) {
        const auto& front = archive.record(generation, pop);
        if (options.on_generation) {
            options.on_generation(front, pop);
        }
        if (!options.keep_genome_history) {
            archive.release_old_genomes();
        }
    };
    auto evaluate_or_abort = [&](std::span<Individual> batch, std::size_t generation) {
        try {
            evaluate_population(problem, batch, workers);
        } catch (const std::exception& e) {
            throw EvolutionAborted("evaluation failed in generation " + std::to_string(generation) + ": " + e.what(),
                                   archive, std::current_exception());
        }
    };

    std::vector<Individual> population;
    population.reserve(n);
    for (auto& mask : init_population(shape, region, cfg)) {
        population.push_back(Individual{next_id++, std::make_shared<const FilterMask>(std::move(mask)), {}, {}, {}});
    }
    evaluate_or_abort(population, 0);
    assign_rank_and_crowding(population);
    archive_generation(0, population);

    for (std::size_t generation = 1; generation <= cfg.iterations; ++generation) {
        auto select_rng = make_stream(cfg.rng_seed, Stream::selection, generation);
        auto const pairs = (n + 1) / 2;
        std::vector<std::pair<std::size_t, std::size_t>> parents(pairs);
        for (auto& [a, b] : parents) {
            a = binary_tournament(population, select_rng);
            b = binary_tournament(population, select_rng);
        }

        std::vector<Individual> offspring;
        offspring.reserve(2 * pairs);
        for (std::size_t p = 0; p < pairs; ++p) {
            auto rng = make_stream(cfg.rng_seed, Stream::variation, generation, p);
            const auto& mother = *population[parents[p].first].genome;
            const auto& father = *population[parents[p].second].genome;
            auto children = bernoulli(rng, cfg.p_c) ? one_point_crossover(mother, father, rng)
                                                    : std::pair<FilterMask, FilterMask>{mother, father};
            for (auto* child : {&children.first, &children.second}) {
                if (offspring.size() == n) {
                    break;
                }
                auto mutated = mutate(*child, region, cfg, rng);
                offspring.push_back(Individual{next_id++, std::make_shared<const FilterMask>(std::move(mutated)), {}, {}, {}});
            }
        }
        evaluate_or_abort(offspring, generation);

        std::vector<Individual> pool;
        pool.reserve(population.size() + offspring.size());
        std::move(population.begin(), population.end(), std::back_inserter(pool));
        std::move(offspring.begin(), offspring.end(), std::back_inserter(pool));
        population = select_survivors(pool, n);
        assign_rank_and_crowding(population);
        archive_generation(generation, population);
    }
    return archive;
}

} // namespace butterfly

#pragma once

#include <cstdint>
#include <stdexcept>

namespace butterfly {

/// NSGA-II parameters. Defaults reproduce the reference setup: 100
/// generations of 101 filter masks, p_c = 0.5, p_m = 0.45 and at most 1% of
/// the pixels touched per mutation.
struct GaConfig {
    std::size_t iterations = 100;
    std::size_t population_size = 101;
    double p_c = 0.5;
    double p_m = 0.45;
    double window_fraction = 0.01;
    std::uint64_t rng_seed = 1;
    /// Standard deviation of the Gaussian used for the initial masks.
    double init_sigma = 16.0;
    /// Evaluation threads. Results do not depend on this value.
    std::size_t workers = 1;

    void validate() const
    {
        if (!(p_c >= 0.0 && p_c <= 1.0)) {
            throw std::invalid_argument("ga: p_c must be in [0, 1]");
        }
        if (!(p_m >= 0.0 && p_m <= 1.0)) {
            throw std::invalid_argument("ga: p_m must be in [0, 1]");
        }
        if (population_size < 2) {
            throw std::invalid_argument("ga: population_size must be >= 2");
        }
        if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
            throw std::invalid_argument("ga: window_fraction must be in (0, 1]");
        }
        if (!(init_sigma >= 0.0)) {
            throw std::invalid_argument("ga: init_sigma must be >= 0");
        }
        if (workers < 1) {
            throw std::invalid_argument("ga: workers must be >= 1");
        }
    }
};

} // namespace butterfly

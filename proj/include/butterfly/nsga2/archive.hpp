#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "butterfly/nsga2/sorting.hpp"

namespace butterfly {

struct ArchiveEntry {
    std::uint64_t id = 0;
    ObjectiveVector objectives;
    /// Null once the archive has released the genome of an old generation.
    std::shared_ptr<const FilterMask> genome;
};

struct GenerationFront {
    std::size_t generation = 0;
    /// Rank-1 members of that generation's population, ordered by id.
    std::vector<ArchiveEntry> members;
};

/// Per-generation record of the non-dominated individuals.
class ParetoArchive {
public:
    /// Stores the rank-1 members of `pop`. Ranks must be assigned.
    auto record(std::size_t generation, std::span<const Individual> pop) -> const GenerationFront&
    {
        GenerationFront front{generation, {}};
        for (const auto& ind : pop) {
            if (ind.rank && *ind.rank == 1) {
                front.members.push_back({ind.id, ind.objectives, ind.genome});
            }
        }
        std::sort(front.members.begin(), front.members.end(),
                  [](const ArchiveEntry& a, const ArchiveEntry& b) { return a.id < b.id; });
        fronts_.push_back(std::move(front));
        return fronts_.back();
    }

    /// Drops genome references of every generation but the latest.
    void release_old_genomes()
    {
        for (std::size_t g = 0; g + 1 < fronts_.size(); ++g) {
            for (auto& m : fronts_[g].members) {
                m.genome.reset();
            }
        }
    }

    [[nodiscard]] auto generations() const noexcept -> std::span<const GenerationFront> { return fronts_; }
    [[nodiscard]] auto empty() const noexcept -> bool { return fronts_.empty(); }
    [[nodiscard]] auto latest() const -> const GenerationFront& { return fronts_.back(); }

    [[nodiscard]] auto best_degrad(std::size_t index) const -> double
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& m : fronts_.at(index).members) {
            best = std::min(best, m.objectives.degrad);
        }
        return best;
    }

private:
    std::vector<GenerationFront> fronts_;
};

} // namespace butterfly

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mlsrk/linalg.hpp"
#include "mlsrk/rng.hpp"

namespace mlsrk {

/// Brownian increments over one observation interval of length `interval`,
/// split into 2^level equal steps. Stored flat, step-major.
class BrownianIncrements {
public:
    BrownianIncrements() = default;
    BrownianIncrements(int level, double interval, std::size_t dim);

    int level() const { return level_; }
    std::size_t dim() const { return dim_; }
    double interval() const { return interval_; }
    std::size_t steps() const { return std::size_t{1} << level_; }
    /// Step size interval * 2^-level.
    double step_size() const { return interval_ / static_cast<double>(steps()); }

    Vec operator[](std::size_t step) const {
        Vec v(dim_);
        for (std::size_t i = 0; i < dim_; ++i) v[i] = values_[step * dim_ + i];
        return v;
    }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Sum over all steps: W at the end of the interval minus W at its start.
    /// Summed pairwise in coarsening order, so coarsen() preserves it exactly.
    Vec displacement() const;

    /// Reset shape, keeping capacity.
    void reshape(int level, double interval, std::size_t dim);

private:
    int level_ = 0;
    double interval_ = 1.0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

/// 2^level i.i.d. N(0, interval * 2^-level I_dim) vectors.
BrownianIncrements sample_increments(int level, double interval, std::size_t dim, RngStream& rng);
/// Same draws written into `out`, reusing its storage.
void sample_increments_into(BrownianIncrements& out, int level, double interval, std::size_t dim, RngStream& rng);

/// Pairwise sums fine[2i] + fine[2i+1]; level drops by one. Throws
/// std::invalid_argument for level-0 input.
BrownianIncrements coarsen(const BrownianIncrements& fine);
void coarsen_into(BrownianIncrements& out, const BrownianIncrements& fine);

}  // namespace mlsrk

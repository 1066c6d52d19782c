#include "mlsrk/paths.hpp"

#include <algorithm>
#include <cmath>
#include <boost/random/normal_distribution.hpp>
#include <stdexcept>

namespace mlsrk {

BrownianIncrements::BrownianIncrements(int level, double interval, std::size_t dim) {
    reshape(level, interval, dim);
}

void BrownianIncrements::reshape(int level, double interval, std::size_t dim) {
    if (level < 0) throw std::invalid_argument("level must be non-negative");
    level_ = level;
    interval_ = interval;
    dim_ = dim;
    const std::size_t n = steps() * dim;
    if (values_.size() == n)
        std::fill(values_.begin(), values_.end(), 0.0);
    else
        values_.assign(n, 0.0);
}

// Pairwise tree in the same order as repeated coarsening, so the
// displacement of a path and of its coarsened path agree bit for bit.
Vec BrownianIncrements::displacement() const {
    Vec total(dim_);
    if (values_.empty()) return total;
    std::vector<double> work(values_);
    for (std::size_t n = steps(); n > 1; n /= 2)
        for (std::size_t s = 0; s < n / 2; ++s)
            for (std::size_t i = 0; i < dim_; ++i) work[s * dim_ + i] = work[2 * s * dim_ + i] + work[(2 * s + 1) * dim_ + i];
    for (std::size_t i = 0; i < dim_; ++i) total[i] = work[i];
    return total;
}

void sample_increments_into(BrownianIncrements& out, int level, double interval, std::size_t dim, RngStream& rng) {
    out.reshape(level, interval, dim);
    // Ziggurat sampler; noticeably cheaper than the polar method in std.
    boost::random::normal_distribution<double> normal(0.0, std::sqrt(out.step_size()));
    for (double& v : out.values()) v = normal(rng);
}

BrownianIncrements sample_increments(int level, double interval, std::size_t dim, RngStream& rng) {
    BrownianIncrements out;
    sample_increments_into(out, level, interval, dim, rng);
    return out;
}

void coarsen_into(BrownianIncrements& out, const BrownianIncrements& fine) {
    if (fine.level() < 1) throw std::invalid_argument("cannot coarsen level-0 increments");
    const std::size_t d = fine.dim();
    out.reshape(fine.level() - 1, fine.interval(), d);
    auto src = fine.values();
    auto dst = out.values();
    for (std::size_t s = 0; s < out.steps(); ++s)
        for (std::size_t i = 0; i < d; ++i) dst[s * d + i] = src[2 * s * d + i] + src[(2 * s + 1) * d + i];
}

BrownianIncrements coarsen(const BrownianIncrements& fine) {
    BrownianIncrements out;
    coarsen_into(out, fine);
    return out;
}

}  // namespace mlsrk

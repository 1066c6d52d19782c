#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlsrk/discretize.hpp"
#include "mlsrk/errors.hpp"
#include "mlsrk/model.hpp"
#include "mlsrk/rng.hpp"

namespace mlsrk {

/// States at the observation times t_1..t_K.
struct Trajectory {
    std::vector<Vec> states;
};

/// Fine and coarse legs of a coupled path at the observation times.
struct CoupledTrajectory {
    std::vector<Vec> fine;
    std::vector<Vec> coarse;
};

template <class Path>
struct FilterResult {
    Path trajectory;
    double log_nc;  // log of the normalizing-constant estimate
};

/// max{g(y|x_fine), g(y|x_coarse)}.
double check_g(const ObservationModel& obs, const Param& theta, const Vec& y, const Vec& x_fine, const Vec& x_coarse);
/// log of check_g.
double log_check_g(const ObservationModel& obs, const Param& theta, const Vec& y, const Vec& x_fine,
                   const Vec& x_coarse);

/// Turn log-weights into normalized weights (max-subtracted) and return
/// log(mean of the unnormalized weights). Throws FilterCollapse(step) when no
/// weight is positive and finite.
double normalize_log_weights(std::span<const double> log_weights, std::span<double> weights, std::size_t step);

/// M indices drawn i.i.d. from `weights` (multinomial resampling). Throws
/// std::invalid_argument if the weights are all zero or invalid.
std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t m, RngStream& rng);

/// Resample `items` with replacement according to `weights`.
template <class T>
std::vector<T> resample_multinomial(std::span<const double> weights, std::span<const T> items, RngStream& rng) {
    if (weights.size() != items.size()) throw std::invalid_argument("weights and items differ in length");
    const auto idx = multinomial_indices(weights, items.size(), rng);
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(items[i]);
    return out;
}

/// Bootstrap particle filter with multinomial resampling after every
/// observation except the last; propagation is the level-`level`
/// discretization of each observation interval. Returns one trajectory picked
/// with the final normalized weights and the log normalizing constant.
FilterResult<Trajectory> particle_filter(const Scheme& scheme, const SdeModel& model, const ObservationModel& obs,
                                         const Param& theta, int level, std::size_t n_particles,
                                         const Dataset& data, RngStream rng);

/// Particle filter on (fine, coarse) pairs propagated by the coupled kernel
/// and weighted by check_g. Requires level >= 1.
FilterResult<CoupledTrajectory> delta_particle_filter(const Scheme& scheme, const SdeModel& model,
                                                      const ObservationModel& obs, const Param& theta, int level,
                                                      std::size_t n_particles, const Dataset& data, RngStream rng);

}  // namespace mlsrk

#include "mlsrk/mcmc.hpp"

#include <numeric>

namespace mlsrk {

ChainOutput<Trajectory> pmmh_single(int level, const Scheme& scheme, const SdeModel& model,
                                    const ObservationModel& obs, const GaussianPrior& prior,
                                    const GaussianRandomWalk& proposal, std::size_t n_particles,
                                    std::size_t n_iterations, std::size_t n_burn, const Dataset& data,
                                    RngStream rng) {
    validate_scheme_for_dim(scheme, model.dim());
    auto estimate = [&](const Param& theta, RngStream stream) {
        return particle_filter(scheme, model, obs, theta, level, n_particles, data, stream);
    };
    auto chain = run_pmmh<Trajectory>(estimate, prior, proposal, n_iterations, n_burn, rng);
    chain.level = level;
    return chain;
}

ChainOutput<CoupledTrajectory> pmmh_coupled(int level, const Scheme& scheme, const SdeModel& model,
                                            const ObservationModel& obs, const GaussianPrior& prior,
                                            const GaussianRandomWalk& proposal, std::size_t n_particles,
                                            std::size_t n_iterations, std::size_t n_burn, const Dataset& data,
                                            RngStream rng) {
    if (level < 1) throw std::invalid_argument("coupled PMMH requires level >= 1");
    validate_scheme_for_dim(scheme, model.dim());
    auto estimate = [&](const Param& theta, RngStream stream) {
        return delta_particle_filter(scheme, model, obs, theta, level, n_particles, data, stream);
    };
    auto chain = run_pmmh<CoupledTrajectory>(estimate, prior, proposal, n_iterations, n_burn, rng);
    chain.level = level;
    return chain;
}

double batch_means_standard_error(std::span<const double> series, std::size_t n_batches) {
    const std::size_t n = series.size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    n_batches = std::min(n_batches, n);
    const std::size_t batch = n / n_batches;
    if (batch == 0) return std::numeric_limits<double>::infinity();
    std::vector<double> means(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        const auto first = series.begin() + static_cast<std::ptrdiff_t>(b * batch);
        means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(batch), 0.0) / static_cast<double>(batch);
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(n_batches);
    double ss = 0.0;
    for (double m : means) ss += (m - grand) * (m - grand);
    const double var_batch = ss / static_cast<double>(n_batches - 1);
    return std::sqrt(var_batch / static_cast<double>(n_batches));
}

}  // namespace mlsrk

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlsrk/filter.hpp"
#include "mlsrk/mcmc.hpp"
#include "mlsrk/model.hpp"

namespace mlsrk {

/// phi(x_{1:K}, theta).
using Functional = std::function<double(std::span<const Vec>, const Param&)>;

/// phi(x, theta) = theta_0, the functional used throughout the experiments.
Functional theta_functional();

struct HWeights {
    double log_h1;
    double log_h2;
    double h1() const;
    double h2() const;
};

/// H1 = prod_k g(y_k|fine_k) / gmax_k and H2 = prod_k g(y_k|coarse_k) / gmax_k
/// with gmax_k = max of the two; accumulated in log space.
HWeights h_weights(const CoupledTrajectory& path, const Param& theta, const ObservationModel& obs,
                   const Dataset& data);

/// One post-burn-in record of a coupled chain reduced to what the increment
/// estimator needs.
struct IncrementSample {
    double phi_fine;
    double phi_coarse;
    double log_h1;
    double log_h2;
};

/// sum(phi_fine H1)/sum(H1) - sum(phi_coarse H2)/sum(H2). Both ratios are
/// evaluated around the first sample so constant phi cancels exactly.
/// Throws std::invalid_argument on an empty window.
double increment_estimate(std::span<const IncrementSample> samples);

/// Increment from the post-burn-in records of a coupled chain.
double increment_estimate(const ChainOutput<CoupledTrajectory>& chain, const ObservationModel& obs,
                          const Dataset& data, const Functional& phi);

/// Average of phi over the post-burn-in records of a single-level chain.
double chain_average(const ChainOutput<Trajectory>& chain, const Functional& phi);

/// Levels, iteration counts and constants for one multilevel run.
struct MlConfig {
    double eps = 0.0;  // target root-MSE
    int beta = 0;
    int l0 = 1;
    int L = 1;
    std::vector<std::size_t> n_iterations;  // N_l for l = l0..L, burn-in included
    std::size_t n_particles = 120;
    std::size_t n_burn = 0;
    double k_l = 0.0;  // allocation constant
    std::uint64_t seed = 0;

    std::size_t iterations_at(int level) const { return n_iterations.at(static_cast<std::size_t>(level - l0)); }
    /// Throws std::invalid_argument if any invariant fails.
    void validate() const;
};

/// L = ceil(2 |log2 eps| / beta), K_L = sum_{l=l0}^{L} 2^{-l(beta-1)/2},
/// N_l = ceil(2 eps^-2 K_L 2^{-l(beta+1)/2}) + n_burn.
/// Throws std::invalid_argument when L < l0 or the inputs are out of range.
MlConfig allocate(double eps, int beta, int l0, std::size_t n_burn);

/// sum_{l=l0}^{L} (N_l - n_burn) 2^l.
double cost(const MlConfig& config);

struct MlResult {
    double estimate = 0.0;
    double base_estimate = 0.0;
    std::vector<double> increments;        // levels l0+1..L
    std::vector<double> acceptance_rates;  // levels l0..L
    double cost = 0.0;
    double wall_seconds = 0.0;
    MlConfig config;
};

enum class Execution { serial, parallel };

/// Base chain at l0 plus independent coupled chains at l0+1..L; level l uses
/// the sub-stream (level, l) of config.seed, so the result does not depend on
/// the execution mode or thread count.
MlResult ml_estimate(const MlConfig& config, const Scheme& scheme, const SdeModel& model,
                     const ObservationModel& obs, const GaussianPrior& prior, const GaussianRandomWalk& proposal,
                     const Dataset& data, const Functional& phi, Execution exec = Execution::parallel);

nlohmann::json to_json(const MlConfig& config);
nlohmann::json to_json(const MlResult& result);

}  // namespace mlsrk

#include "mlsrk/multilevel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mlsrk {

Functional theta_functional() {
    return [](std::span<const Vec>, const Param& theta) { return theta[0]; };
}

double HWeights::h1() const { return std::exp(log_h1); }
double HWeights::h2() const { return std::exp(log_h2); }

HWeights h_weights(const CoupledTrajectory& path, const Param& theta, const ObservationModel& obs,
                   const Dataset& data) {
    const std::size_t n = data.size();
    if (path.fine.size() != n || path.coarse.size() != n)
        throw std::invalid_argument("coupled trajectory length does not match the dataset");
    HWeights h{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        const double lf = obs.log_density(theta, data.observations[k], path.fine[k]);
        const double lc = obs.log_density(theta, data.observations[k], path.coarse[k]);
        const double top = std::max(lf, lc);
        h.log_h1 += lf - top;
        h.log_h2 += lc - top;
    }
    return h;
}

namespace {

// sum(phi_i w_i) / sum(w_i) with w_i = exp(log_w_i - max), written as
// phi_0 + sum(u_i (phi_i - phi_0)).
template <class PhiOf, class LogWOf>
double self_normalized_mean(std::span<const IncrementSample> samples, PhiOf phi_of, LogWOf log_w_of) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) top = std::max(top, log_w_of(s));
    const double anchor = phi_of(samples.front());
    double num = 0.0;
    double den = 0.0;
    for (const auto& s : samples) {
        const double w = std::exp(log_w_of(s) - top);
        num += w * (phi_of(s) - anchor);
        den += w;
    }
    return anchor + num / den;
}

}  // namespace

double increment_estimate(std::span<const IncrementSample> samples) {
    if (samples.empty()) throw std::invalid_argument("increment estimate needs a non-empty post-burn-in window");
    const double fine = self_normalized_mean(
        samples, [](const IncrementSample& s) { return s.phi_fine; },
        [](const IncrementSample& s) { return s.log_h1; });
    const double coarse = self_normalized_mean(
        samples, [](const IncrementSample& s) { return s.phi_coarse; },
        [](const IncrementSample& s) { return s.log_h2; });
    return fine - coarse;
}

double increment_estimate(const ChainOutput<CoupledTrajectory>& chain, const ObservationModel& obs,
                          const Dataset& data, const Functional& phi) {
    const auto window = chain.post_burn_in();
    std::vector<IncrementSample> samples;
    samples.reserve(window.size());
    for (const auto& r : window) {
        const HWeights h = h_weights(*r.path, r.theta, obs, data);
        samples.push_back({phi(r.path->fine, r.theta), phi(r.path->coarse, r.theta), h.log_h1, h.log_h2});
    }
    return increment_estimate(samples);
}

double chain_average(const ChainOutput<Trajectory>& chain, const Functional& phi) {
    const auto window = chain.post_burn_in();
    if (window.empty()) throw std::invalid_argument("chain average needs a non-empty post-burn-in window");
    double sum = 0.0;
    for (const auto& r : window) sum += phi(r.path->states, r.theta);
    return sum / static_cast<double>(window.size());
}

void MlConfig::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("MlConfig: eps must be positive");
    if (l0 < 0 || L < l0) throw std::invalid_argument("MlConfig: need 0 <= l0 <= L");
    if (n_iterations.size() != static_cast<std::size_t>(L - l0 + 1))
        throw std::invalid_argument("MlConfig: one iteration count per level required");
    for (std::size_t n : n_iterations)
        if (n <= n_burn) throw std::invalid_argument("MlConfig: every N_l must exceed the burn-in");
    if (n_particles < 2) throw std::invalid_argument("MlConfig: need at least two particles");
}

MlConfig allocate(double eps, int beta, int l0, std::size_t n_burn) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("allocate: eps must lie in (0, 1)");
    if (beta < 2) throw std::invalid_argument("allocate: beta must be at least 2");
    if (l0 < 0) throw std::invalid_argument("allocate: l0 must be non-negative");

    MlConfig cfg;
    cfg.eps = eps;
    cfg.beta = beta;
    cfg.l0 = l0;
    cfg.n_burn = n_burn;
    // The 1e-9 slack keeps exact dyadic inputs (eps = 2^-6, beta = 3) from
    // rounding up through floating-point noise.
    const double level_real = 2.0 * std::abs(std::log2(eps)) / beta;
    cfg.L = static_cast<int>(std::ceil(level_real - 1e-9));
    if (cfg.L < l0)
        throw std::invalid_argument("allocate: eps too large, finest level " + std::to_string(cfg.L) +
                                    " is below l0 = " + std::to_string(l0));

    cfg.k_l = 0.0;
    for (int l = l0; l <= cfg.L; ++l) cfg.k_l += std::pow(2.0, -l * (beta - 1) / 2.0);
    const double scale = 2.0 / (eps * eps) * cfg.k_l;
    for (int l = l0; l <= cfg.L; ++l) {
        const double n = scale * std::pow(2.0, -l * (beta + 1) / 2.0);
        cfg.n_iterations.push_back(static_cast<std::size_t>(std::ceil(n * (1.0 - 1e-12))) + n_burn);
    }
    return cfg;
}

double cost(const MlConfig& config) {
    double total = 0.0;
    for (int l = config.l0; l <= config.L; ++l)
        total += static_cast<double>(config.iterations_at(l) - config.n_burn) * std::ldexp(1.0, l);
    return total;
}

MlResult ml_estimate(const MlConfig& config, const Scheme& scheme, const SdeModel& model,
                     const ObservationModel& obs, const GaussianPrior& prior, const GaussianRandomWalk& proposal,
                     const Dataset& data, const Functional& phi, Execution exec) {
    config.validate();
    validate_scheme_for_dim(scheme, model.dim());
    const auto start = std::chrono::steady_clock::now();
    const RngStream root(config.seed);
    const int n_levels = config.L - config.l0 + 1;

    std::vector<double> level_values(static_cast<std::size_t>(n_levels));
    std::vector<double> acceptance(static_cast<std::size_t>(n_levels));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_levels));

    auto run_level = [&](int idx) {
        const int l = config.l0 + idx;
        const RngStream stream = root.derive(StreamPurpose::level, static_cast<std::uint64_t>(l));
        const std::size_t n_iter = config.iterations_at(l);  // post-burn-in window holds N_l - n_burn records
        try {
            if (idx == 0) {
                const auto chain = pmmh_single(l, scheme, model, obs, prior, proposal, config.n_particles, n_iter,
                                               config.n_burn, data, stream);
                level_values[idx] = chain_average(chain, phi);
                acceptance[idx] = chain.acceptance_rate();
            } else {
                const auto chain = pmmh_coupled(l, scheme, model, obs, prior, proposal, config.n_particles, n_iter,
                                                config.n_burn, data, stream);
                level_values[idx] = increment_estimate(chain, obs, data, phi);
                acceptance[idx] = chain.acceptance_rate();
            }
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    };

    if (exec == Execution::parallel) {
        // Finest levels first: they are the most expensive per iteration.
#pragma omp parallel for schedule(dynamic, 1)
        for (int idx = n_levels - 1; idx >= 0; --idx) run_level(idx);
    } else {
        for (int idx = 0; idx < n_levels; ++idx) run_level(idx);
    }

    for (int idx = 0; idx < n_levels; ++idx) {
        if (!failures[idx]) continue;
        try {
            std::rethrow_exception(failures[idx]);
        } catch (const std::exception& e) {
            throw std::runtime_error("multilevel run failed at level " + std::to_string(config.l0 + idx) + ": " +
                                     e.what());
        }
    }

    MlResult result;
    result.config = config;
    result.base_estimate = level_values.front();
    result.estimate = result.base_estimate;
    for (int idx = 1; idx < n_levels; ++idx) {
        result.increments.push_back(level_values[idx]);
        result.estimate += level_values[idx];
    }
    result.acceptance_rates = acceptance;
    result.cost = cost(config);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

nlohmann::json to_json(const MlConfig& config) {
    return {{"eps", config.eps},
            {"beta", config.beta},
            {"l0", config.l0},
            {"L", config.L},
            {"N", config.n_iterations},
            {"M", config.n_particles},
            {"n_burn", config.n_burn},
            {"K_L", config.k_l},
            {"seed", config.seed}};
}

nlohmann::json to_json(const MlResult& result) {
    return {{"estimate", result.estimate},
            {"base_estimate", result.base_estimate},
            {"increments", result.increments},
            {"acceptance_rates", result.acceptance_rates},
            {"cost", result.cost},
            {"wall_seconds", result.wall_seconds},
            {"seed", result.config.seed},
            {"config", to_json(result.config)}};
}

}  // namespace mlsrk

#include "mlsrk/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>

#include "mlsrk/paths.hpp"

namespace mlsrk {

double log_check_g(const ObservationModel& obs, const Param& theta, const Vec& y, const Vec& x_fine,
                   const Vec& x_coarse) {
    return std::max(obs.log_density(theta, y, x_fine), obs.log_density(theta, y, x_coarse));
}

double check_g(const ObservationModel& obs, const Param& theta, const Vec& y, const Vec& x_fine, const Vec& x_coarse) {
    return std::exp(log_check_g(obs, theta, y, x_fine, x_coarse));
}

double normalize_log_weights(std::span<const double> log_weights, std::span<double> weights, std::size_t step) {
    double top = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights)
        if (std::isfinite(lw)) top = std::max(top, lw);
    if (!std::isfinite(top)) throw FilterCollapse(step);

    double total = 0.0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        weights[i] = std::isfinite(log_weights[i]) ? std::exp(log_weights[i] - top) : 0.0;
        total += weights[i];
    }
    for (double& w : weights) w /= total;
    return top + std::log(total / static_cast<double>(log_weights.size()));
}

std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t m, RngStream& rng) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("resampling weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("degenerate resampling weights (all zero)");
    // Inverse CDF on the running sum.
    std::vector<double> cdf(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cdf.begin());
    std::size_t last = weights.size() - 1;
    while (weights[last] == 0.0) --last;
    std::vector<std::size_t> out(m);
    for (auto& i : out) {
        const double u = rng.uniform() * cdf.back();
        i = std::min(static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), last);
        while (weights[i] == 0.0) ++i;  // u landed exactly on a flat step
    }
    return out;
}

namespace {

class SinglePolicy {
public:
    using State = Vec;
    using Path = Trajectory;

    SinglePolicy(const Scheme& scheme, const SdeModel& model, const ObservationModel& obs, const Param& theta,
                 int level, double delta)
        : simulate_(scheme, model), model_(model), obs_(obs), theta_(theta), level_(level), delta_(delta) {}

    State initial() const { return model_.initial_state(); }

    State propagate(const State& from, RngStream& rng) {
        sample_increments_into(incs_, level_, delta_, model_.dim(), rng);
        return simulate_(theta_, from, incs_);
    }
    State dead() const { return Vec(model_.dim(), std::numeric_limits<double>::quiet_NaN()); }

    double log_weight(const State& x, const Vec& y) const { return obs_.log_density(theta_, y, x); }

    static Path make_path(std::size_t k) { return Path{std::vector<Vec>(k)}; }
    static void store(Path& path, std::size_t k, const State& s) { path.states[k] = s; }

private:
    IntervalSimulator simulate_;
    const SdeModel& model_;
    const ObservationModel& obs_;
    const Param& theta_;
    int level_;
    double delta_;
    BrownianIncrements incs_;
};

class CoupledPolicy {
public:
    using State = std::pair<Vec, Vec>;
    using Path = CoupledTrajectory;

    CoupledPolicy(const Scheme& scheme, const SdeModel& model, const ObservationModel& obs, const Param& theta,
                  int level, double delta)
        : simulate_(scheme, model), model_(model), obs_(obs), theta_(theta), level_(level), delta_(delta) {}

    State initial() const { return {model_.initial_state(), model_.initial_state()}; }

    State propagate(const State& from, RngStream& rng) {
        sample_increments_into(fine_, level_, delta_, model_.dim(), rng);
        return simulate_.coupled(theta_, from.first, from.second, fine_, coarse_);
    }
    State dead() const {
        const Vec nan(model_.dim(), std::numeric_limits<double>::quiet_NaN());
        return {nan, nan};
    }

    double log_weight(const State& x, const Vec& y) const { return log_check_g(obs_, theta_, y, x.first, x.second); }

    static Path make_path(std::size_t k) { return Path{std::vector<Vec>(k), std::vector<Vec>(k)}; }
    static void store(Path& path, std::size_t k, const State& s) {
        path.fine[k] = s.first;
        path.coarse[k] = s.second;
    }

private:
    IntervalSimulator simulate_;
    const SdeModel& model_;
    const ObservationModel& obs_;
    const Param& theta_;
    int level_;
    double delta_;
    BrownianIncrements fine_;
    BrownianIncrements coarse_;
};

template <class Policy>
FilterResult<typename Policy::Path> run_filter(Policy& policy, std::size_t n_particles, const Dataset& data,
                                               RngStream rng) {
    using State = typename Policy::State;
    if (n_particles < 2) throw std::invalid_argument("particle filter needs at least two particles");
    const std::size_t n_obs = data.size();
    if (n_obs == 0) throw std::invalid_argument("particle filter needs at least one observation");

    const RngStream propagate_root = rng.derive(StreamPurpose::propagate);
    const RngStream resample_root = rng.derive(StreamPurpose::resample);

    std::vector<std::vector<State>> history(n_obs, std::vector<State>(n_particles));
    std::vector<std::vector<std::uint32_t>> parent(n_obs, std::vector<std::uint32_t>(n_particles, 0));
    std::vector<double> log_w(n_particles);
    std::vector<double> w(n_particles);
    const State origin = policy.initial();
    double log_nc = 0.0;

    for (std::size_t k = 0; k < n_obs; ++k) {
        for (std::size_t i = 0; i < n_particles; ++i) {
            const State& from = k == 0 ? origin : history[k - 1][parent[k][i]];
            RngStream stream = propagate_root.derive(k, i);
            try {
                history[k][i] = policy.propagate(from, stream);
                log_w[i] = policy.log_weight(history[k][i], data.observations[k]);
            } catch (const NumericalDomainError&) {
                // A particle whose path blows up carries no weight.
                history[k][i] = policy.dead();
                log_w[i] = -std::numeric_limits<double>::infinity();
            }
        }
        log_nc += normalize_log_weights(log_w, w, k + 1);
        if (k + 1 == n_obs) break;

        RngStream stream = resample_root.derive(k);
        const auto idx = multinomial_indices(w, n_particles, stream);
        for (std::size_t i = 0; i < n_particles; ++i) parent[k + 1][i] = static_cast<std::uint32_t>(idx[i]);
    }

    RngStream select_stream = rng.derive(StreamPurpose::select);
    std::size_t j = multinomial_indices(w, 1, select_stream).front();
    auto path = Policy::make_path(n_obs);
    for (std::size_t k = n_obs; k-- > 0;) {
        Policy::store(path, k, history[k][j]);
        j = parent[k][j];
    }
    return {std::move(path), log_nc};
}

}  // namespace

FilterResult<Trajectory> particle_filter(const Scheme& scheme, const SdeModel& model, const ObservationModel& obs,
                                         const Param& theta, int level, std::size_t n_particles,
                                         const Dataset& data, RngStream rng) {
    if (level < 0) throw std::invalid_argument("level must be non-negative");
    validate_scheme_for_dim(scheme, model.dim());
    SinglePolicy policy(scheme, model, obs, theta, level, data.delta);
    return run_filter(policy, n_particles, data, rng);
}

FilterResult<CoupledTrajectory> delta_particle_filter(const Scheme& scheme, const SdeModel& model,
                                                      const ObservationModel& obs, const Param& theta, int level,
                                                      std::size_t n_particles, const Dataset& data, RngStream rng) {
    if (level < 1) throw std::invalid_argument("delta particle filter requires level >= 1");
    validate_scheme_for_dim(scheme, model.dim());
    CoupledPolicy policy(scheme, model, obs, theta, level, data.delta);
    return run_filter(policy, n_particles, data, rng);
}

}  // namespace mlsrk

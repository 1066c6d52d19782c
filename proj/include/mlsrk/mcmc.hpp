#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlsrk/errors.hpp"
#include "mlsrk/filter.hpp"
#include "mlsrk/model.hpp"
#include "mlsrk/rng.hpp"

namespace mlsrk {

template <class Path>
struct ChainRecord {
    Param theta;
    // Shared between consecutive records while proposals are rejected.
    std::shared_ptr<const Path> path;
    double log_nc = 0.0;
    bool accepted = false;
};

/// Records for iterations 0..N of a PMMH chain.
template <class Path>
struct ChainOutput {
    std::vector<ChainRecord<Path>> records;
    std::size_t accepted = 0;
    std::size_t failed_proposals = 0;  // filter collapsed or path blew up
    int level = 0;
    std::size_t n_burn = 0;

    std::size_t iterations() const { return records.empty() ? 0 : records.size() - 1; }
    double acceptance_rate() const {
        return iterations() == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(iterations());
    }
    /// Records n_burn + 1 .. N.
    std::span<const ChainRecord<Path>> post_burn_in() const {
        if (records.size() <= n_burn + 1) return {};
        return std::span<const ChainRecord<Path>>(records).subspan(n_burn + 1);
    }
};

/// Symmetric Gaussian random walk on theta with per-coordinate scale.
class GaussianRandomWalk {
public:
    explicit GaussianRandomWalk(Vec step) : step_(step) {
        for (double s : step)
            if (!(s >= 0.0)) throw std::invalid_argument("random-walk step size must be non-negative");
    }
    explicit GaussianRandomWalk(double step) : GaussianRandomWalk(Vec{step}) {}

    Param draw(const Param& from, RngStream& rng) const {
        std::normal_distribution<double> normal;
        Param out = from;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += step_[i] * normal(rng);
        return out;
    }
    /// log q(to | from) up to a constant; symmetric so only ratios matter.
    double log_density(const Param& to, const Param& from) const {
        double s = 0.0;
        for (std::size_t i = 0; i < to.size(); ++i) {
            if (step_[i] == 0.0) continue;
            const double r = (to[i] - from[i]) / step_[i];
            s -= 0.5 * r * r;
        }
        return s;
    }
    const Vec& step() const { return step_; }

private:
    Vec step_;
};

/// Generic particle-marginal Metropolis-Hastings.
///
/// `estimate(theta, stream)` returns a FilterResult<Path>; it may throw
/// FilterCollapse or NumericalDomainError, in which case the proposal is
/// rejected. `prior` provides log_pdf/sample and `proposal` draw/log_density.
/// Every random draw comes from a sub-stream keyed by the iteration index, so
/// the chain is a pure function of `rng`.
template <class Path, class Estimator, class Prior, class Proposal>
ChainOutput<Path> run_pmmh(Estimator&& estimate, const Prior& prior, const Proposal& proposal,
                           std::size_t n_iterations, std::size_t n_burn, RngStream rng) {
    if (n_iterations < 1) throw std::invalid_argument("PMMH needs at least one iteration");
    ChainOutput<Path> chain;
    chain.n_burn = n_burn;
    chain.records.reserve(n_iterations + 1);

    ChainRecord<Path> current;
    constexpr int kMaxInitAttempts = 100;
    for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxInitAttempts)
            throw std::runtime_error("PMMH initialisation failed: filter collapsed for every prior draw");
        RngStream prior_rng = rng.derive(StreamPurpose::prior, attempt);
        current.theta = prior.sample(prior_rng);
        try {
            auto est = estimate(current.theta, rng.derive(StreamPurpose::filter, 0, attempt));
            current.path = std::make_shared<const Path>(std::move(est.trajectory));
            current.log_nc = est.log_nc;
            break;
        } catch (const FilterCollapse&) {
        } catch (const NumericalDomainError&) {
        }
    }
    current.accepted = false;
    double current_log_prior = prior.log_pdf(current.theta);
    chain.records.push_back(current);

    for (std::size_t k = 0; k < n_iterations; ++k) {
        RngStream proposal_rng = rng.derive(StreamPurpose::proposal, k);
        const Param candidate = proposal.draw(current.theta, proposal_rng);
        const double candidate_log_prior = prior.log_pdf(candidate);
        bool accept = false;
        if (candidate_log_prior > -std::numeric_limits<double>::infinity()) {
            try {
                auto est = estimate(candidate, rng.derive(StreamPurpose::filter, k + 1));
                const double log_ratio = candidate_log_prior + proposal.log_density(current.theta, candidate) -
                                         current_log_prior - proposal.log_density(candidate, current.theta) +
                                         est.log_nc - current.log_nc;
                RngStream u_rng = rng.derive(StreamPurpose::accept, k);
                if (std::log(u_rng.uniform()) < log_ratio) {
                    accept = true;
                    current.theta = candidate;
                    current.path = std::make_shared<const Path>(std::move(est.trajectory));
                    current.log_nc = est.log_nc;
                    current_log_prior = candidate_log_prior;
                }
            } catch (const FilterCollapse&) {
                ++chain.failed_proposals;
            } catch (const NumericalDomainError&) {
                ++chain.failed_proposals;
            }
        }
        current.accepted = accept;
        if (accept) ++chain.accepted;
        chain.records.push_back(current);
    }
    if (chain.failed_proposals > 0)
        std::cerr << "warning: " << chain.failed_proposals
                  << " PMMH proposals rejected after filter failure\n";
    return chain;
}

/// PMMH targeting the level-`level` posterior; each proposal runs
/// particle_filter.
ChainOutput<Trajectory> pmmh_single(int level, const Scheme& scheme, const SdeModel& model,
                                    const ObservationModel& obs, const GaussianPrior& prior,
                                    const GaussianRandomWalk& proposal, std::size_t n_particles,
                                    std::size_t n_iterations, std::size_t n_burn, const Dataset& data,
                                    RngStream rng);

/// PMMH targeting the coupled (level, level - 1) posterior; each proposal runs
/// delta_particle_filter.
ChainOutput<CoupledTrajectory> pmmh_coupled(int level, const Scheme& scheme, const SdeModel& model,
                                            const ObservationModel& obs, const GaussianPrior& prior,
                                            const GaussianRandomWalk& proposal, std::size_t n_particles,
                                            std::size_t n_iterations, std::size_t n_burn, const Dataset& data,
                                            RngStream rng);

/// Monte Carlo standard error of the mean of a correlated series by
/// non-overlapping batch means.
double batch_means_standard_error(std::span<const double> series, std::size_t n_batches = 50);

/// CSV: iteration,theta1..,log_nc,accepted.
template <class Path>
void write_chain_csv(const ChainOutput<Path>& chain, std::ostream& out) {
    const std::size_t p = chain.records.empty() ? 0 : chain.records.front().theta.size();
    out << "iteration";
    for (std::size_t i = 0; i < p; ++i) out << ",theta" << i + 1;
    out << ",log_nc,accepted\n";
    const auto old_precision = out.precision(17);
    for (std::size_t k = 0; k < chain.records.size(); ++k) {
        const auto& r = chain.records[k];
        out << k;
        for (double t : r.theta) out << ',' << t;
        out << ',' << r.log_nc << ',' << (r.accepted ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

}  // namespace mlsrk

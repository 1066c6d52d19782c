#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mlsrk/mcmc.hpp"
#include "support.hpp"

using namespace mlsrk;

namespace {

// theta in {0, 1} with prior mass (0.3, 0.7).
struct TwoPointPrior {
    double log_pdf(const Param& t) const {
        if (t[0] == 0.0) return std::log(0.3);
        if (t[0] == 1.0) return std::log(0.7);
        return -std::numeric_limits<double>::infinity();
    }
    Param sample(RngStream&) const { return Param{0.0}; }
};

// Always proposes the other point; symmetric.
struct FlipProposal {
    Param draw(const Param& from, RngStream&) const { return Param{1.0 - from[0]}; }
    double log_density(const Param&, const Param&) const { return 0.0; }
};

FilterResult<Trajectory> flat_estimate(const Param&, RngStream) { return {Trajectory{}, 0.0}; }

}  // namespace

TEST_CASE("two-point parameter with exact likelihood") {
    const double l0 = 0.2, l1 = 0.05;
    const double p1 = 0.7 * l1 / (0.3 * l0 + 0.7 * l1);
    auto exact = [&](const Param& t, RngStream) {
        return FilterResult<Trajectory>{Trajectory{}, std::log(t[0] == 0.0 ? l0 : l1)};
    };
    const std::size_t n = 100000;
    const auto chain = run_pmmh<Trajectory>(exact, TwoPointPrior{}, FlipProposal{}, n, 0, RngStream(1));
    double ones = 0.0;
    std::size_t up = 0, down = 0;
    for (std::size_t k = 1; k < chain.records.size(); ++k) {
        ones += chain.records[k].theta[0];
        const double a = chain.records[k - 1].theta[0], b = chain.records[k].theta[0];
        up += a == 0.0 && b == 1.0;
        down += a == 1.0 && b == 0.0;
    }
    const double freq = ones / n;
    // Two-state chain: flip probabilities give lag-one autocorrelation rho.
    const double r = (0.7 * l1) / (0.3 * l0);
    const double rho = 1.0 - std::min(1.0, r) - std::min(1.0, 1.0 / r);
    const double sd = std::sqrt(p1 * (1 - p1) / n * (1 + rho) / (1 - rho));
    CHECK(std::abs(freq - p1) < 4 * sd);
    const double flips = static_cast<double>(up + down);
    CHECK(std::abs(static_cast<double>(up) - static_cast<double>(down)) < 4 * std::sqrt(flips) + 1);
}

TEST_CASE("prior-only target recovers the prior") {
    const GaussianPrior prior(-1.4, 0.2);
    const GaussianRandomWalk rw(0.8);
    const std::size_t n = 100000;
    const auto chain = run_pmmh<Trajectory>(flat_estimate, prior, rw, n, 1000, RngStream(2));
    std::vector<double> theta, sq;
    for (const auto& rec : chain.post_burn_in()) {
        theta.push_back(rec.theta[0]);
        sq.push_back((rec.theta[0] + 1.4) * (rec.theta[0] + 1.4));
    }
    double mean = 0.0, var = 0.0;
    for (double t : theta) mean += t / theta.size();
    for (double s : sq) var += s / sq.size();
    CHECK(std::abs(mean + 1.4) < 3 * batch_means_standard_error(theta));
    CHECK(std::abs(var - 0.2) < 3 * batch_means_standard_error(sq));
}

TEST_CASE("run_pmmh bookkeeping") {
    const GaussianPrior prior(0.0, 1.0);
    SUBCASE("rejections leave the whole state unchanged") {
        auto noisy = [](const Param& t, RngStream rng) {
            return FilterResult<Trajectory>{Trajectory{{Vec{t[0]}}}, -t[0] * t[0] + 0.5 * rng.uniform()};
        };
        const auto chain = run_pmmh<Trajectory>(noisy, prior, GaussianRandomWalk(1.5), 2000, 0, RngStream(3));
        CHECK(chain.records.size() == 2001);
        std::size_t accepted = 0;
        for (std::size_t k = 1; k < chain.records.size(); ++k) {
            const auto& prev = chain.records[k - 1];
            const auto& cur = chain.records[k];
            if (cur.accepted) {
                ++accepted;
                continue;
            }
            CHECK(cur.theta == prev.theta);
            CHECK(cur.path == prev.path);
            CHECK(cur.log_nc == prev.log_nc);
        }
        CHECK(accepted == chain.accepted);
        CHECK(chain.acceptance_rate() > 0.0);
        CHECK(chain.acceptance_rate() < 1.0);
    }
    SUBCASE("equal estimates give the prior ratio") {
        // With log_nc constant the chain is Metropolis on the prior; from a
        // fixed start and fixed streams, acceptance follows the prior ratio
        // exactly.
        const auto chain = run_pmmh<Trajectory>(flat_estimate, prior, GaussianRandomWalk(0.5), 500, 0, RngStream(4));
        const RngStream root(4);
        for (std::size_t k = 0; k < 500; ++k) {
            RngStream prop = root.derive(StreamPurpose::proposal, k);
            const Param cand = GaussianRandomWalk(0.5).draw(chain.records[k].theta, prop);
            const double log_r = prior.log_pdf(cand) - prior.log_pdf(chain.records[k].theta);
            RngStream u = root.derive(StreamPurpose::accept, k);
            CHECK(chain.records[k + 1].accepted == (std::log(u.uniform()) < log_r));
        }
    }
    SUBCASE("failed estimates are counted rejections") {
        auto failing = [](const Param& t, RngStream) -> FilterResult<Trajectory> {
            if (t[0] > 0.5) throw FilterCollapse(3);
            return {Trajectory{}, 0.0};
        };
        const auto chain = run_pmmh<Trajectory>(failing, GaussianPrior(-2.0, 0.01), GaussianRandomWalk(2.0), 300, 0, RngStream(5));
        CHECK(chain.failed_proposals > 0);
        for (const auto& rec : chain.records) CHECK(rec.theta[0] <= 0.5);
    }
    SUBCASE("zero iterations rejected") {
        CHECK_THROWS_AS(run_pmmh<Trajectory>(flat_estimate, prior, GaussianRandomWalk(1.0), 0, 0, RngStream(1)), std::invalid_argument);
    }
}

TEST_CASE("pmmh on the gbm1d model") {
    const ModelPreset p = make_preset("gbm1d");
    const Dataset data = generate_data(*p.sde, *p.obs, p.theta_star, 120, 8, 1);
    const Scheme rk4 = make_scheme("rk4");

    SUBCASE("zero proposal step never moves theta") {
        const auto chain = pmmh_single(1, rk4, *p.sde, *p.obs, p.prior, GaussianRandomWalk(0.0), 16, 50, 0, data, RngStream(1));
        for (const auto& rec : chain.records) CHECK(rec.theta == chain.records.front().theta);
    }
    SUBCASE("coupled chain acceptance at level 2 with paper settings") {
        const auto chain = pmmh_coupled(2, rk4, *p.sde, *p.obs, p.prior, GaussianRandomWalk(p.proposal_step), 120, 600, 100, data, RngStream(2));
        CHECK(chain.acceptance_rate() > 0.05);
        CHECK(chain.acceptance_rate() < 0.8);
        CHECK(chain.level == 2);
    }
    SUBCASE("fixed seeds give identical chains") {
        const auto a = pmmh_coupled(2, rk4, *p.sde, *p.obs, p.prior, GaussianRandomWalk(0.8), 16, 100, 10, data, RngStream(3));
        const auto b = pmmh_coupled(2, rk4, *p.sde, *p.obs, p.prior, GaussianRandomWalk(0.8), 16, 100, 10, data, RngStream(3));
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t k = 0; k < a.records.size(); ++k) {
            CHECK(a.records[k].theta == b.records[k].theta);
            CHECK(a.records[k].log_nc == b.records[k].log_nc);
            CHECK(a.records[k].path->fine == b.records[k].path->fine);
        }
    }
    SUBCASE("identical legs: coupled chain matches the single-level chain") {
        const auto frozen = testing::frozen_model(1, Vec{0.8});
        const GaussianObservation obs(1, ObsMap::identity, 0.2);
        const Dataset d = generate_data(*p.sde, obs, p.theta_star, 10, 4, 2);
        const auto single = pmmh_single(3, rk4, *frozen, obs, p.prior, GaussianRandomWalk(0.5), 8, 200, 0, d, RngStream(6));
        const auto coupled = pmmh_coupled(3, rk4, *frozen, obs, p.prior, GaussianRandomWalk(0.5), 8, 200, 0, d, RngStream(6));
        REQUIRE(single.records.size() == coupled.records.size());
        for (std::size_t k = 0; k < single.records.size(); ++k) {
            CHECK(single.records[k].theta == coupled.records[k].theta);
            CHECK(single.records[k].log_nc == coupled.records[k].log_nc);
        }
        CHECK(single.accepted == coupled.accepted);
    }
}

TEST_CASE("batch means standard error") {
    RngStream rng(9);
    std::normal_distribution<double> normal;
    std::vector<double> iid(50000);
    for (auto& v : iid) v = normal(rng);
    CHECK(batch_means_standard_error(iid) == doctest::Approx(1.0 / std::sqrt(50000.0)).epsilon(0.25));
    // AR(1) with rho = 0.9 inflates the error by sqrt((1 + rho) / (1 - rho)).
    std::vector<double> ar(50000);
    double x = 0.0;
    for (auto& v : ar) v = x = 0.9 * x + std::sqrt(1 - 0.81) * normal(rng);
    CHECK(batch_means_standard_error(ar) == doctest::Approx(std::sqrt(19.0 / 50000.0)).epsilon(0.3));
}

TEST_CASE("chain csv") {
    const auto chain = run_pmmh<Trajectory>(flat_estimate, GaussianPrior(0.0, 1.0), GaussianRandomWalk(1.0), 3, 0, RngStream(1));
    std::ostringstream out;
    write_chain_csv(chain, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,theta1,log_nc,accepted");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}

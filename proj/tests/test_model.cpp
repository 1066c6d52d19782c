#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mlsrk/discretize.hpp"
#include "mlsrk/errors.hpp"
#include "mlsrk/model.hpp"
#include "mlsrk/paths.hpp"
#include "support.hpp"

using namespace mlsrk;

namespace {

std::vector<Vec> random_points(std::size_t n, std::size_t d, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Vec x(d);
        for (auto& v : x) v = u(gen);
        pts.push_back(x);
    }
    return pts;
}

}  // namespace

TEST_CASE("corrected drift") {
    SUBCASE("constant diffusion leaves the drift unchanged for any lambda") {
        const auto m = make_linear_model(2, 0.7, 1.3, Vec{0.2, -0.4});
        const Vec x{0.5, -1.5};
        for (double lambda : {0.0, 0.5, 3.0}) CHECK(corrected_drift(*m, Param{0.0}, x, lambda) == m->drift(Param{0.0}, x));
    }
    SUBCASE("gbm1d at the reference point") {
        const GbmModel m(1, 0.66, 0.7);
        const double expected = std::exp(-1.8971) * 0.7 - 0.5 * 0.66 * 0.66 * 0.7;
        const Vec out = corrected_drift(m, Param{-1.8971}, Vec{0.7}, 0.5);
        CHECK(out[0] == doctest::Approx(expected).epsilon(1e-14));
        CHECK(out[0] == doctest::Approx(-0.04747).epsilon(1e-3));
    }
    SUBCASE("nonlinear component at zero") {
        const NonlinearModel m(1.0, Vec{-1.0, -2.0});
        const Vec out = corrected_drift(m, Param{1.0}, Vec{0.0, 0.0}, 0.5);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
    }
    SUBCASE("lambda = 0 returns the drift exactly") {
        const GbmModel m(3, 0.66, 0.7);
        for (const Vec& x : random_points(50, 3, 0.1, 3.0, 1)) CHECK(corrected_drift(m, Param{-1.0}, x, 0.0) == m.drift(Param{-1.0}, x));
    }
    SUBCASE("non-finite drift names the component") {
        const FunctionModel m(
            Vec{1.0, 1.0}, [](const Param&, const Vec&) { return Vec{1.0, NAN}; },
            [](const Param&, const Vec&) { return Mat::identity(2, 1.0); },
            [](const Param&, const Vec&, std::size_t) { return Mat(2); });
        try {
            corrected_drift(m, Param{0.0}, Vec{1.0, 1.0}, 0.5);
            FAIL("expected NumericalDomainError");
        } catch (const NumericalDomainError& e) {
            CHECK(e.index() == 1);
        }
    }
}

TEST_CASE("sigma_bar closed forms agree with the jacobian contraction") {
    const GbmModel gbm(3, 0.66, 0.7);
    const NonlinearModel nl(1.0, Vec{-1.0, -2.0});
    for (const Vec& x : random_points(100, 3, 0.1, 3.0, 2)) {
        const Vec fast = gbm.sigma_bar(Param{-1.0}, x);
        const Vec slow = gbm.SdeModel::sigma_bar(Param{-1.0}, x);
        for (std::size_t i = 0; i < 3; ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-14));
    }
    for (const Vec& x : random_points(100, 2, -3.0, 3.0, 3)) {
        const Vec fast = nl.sigma_bar(Param{1.0}, x);
        const Vec slow = nl.SdeModel::sigma_bar(Param{1.0}, x);
        for (std::size_t i = 0; i < 2; ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
    }
}

TEST_CASE("diffusion jacobians match finite differences on every preset") {
    std::mt19937_64 gen(11);
    for (const auto& name : preset_names()) {
        const ModelPreset p = make_preset(name);
        const std::size_t d = p.sde->dim();
        const bool positive = name != "nonlinear2d";
        std::uniform_real_distribution<double> ux(positive ? 0.1 : -3.0, 3.0), ut(-2.5, 1.5);
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            Vec x(d);
            for (auto& v : x) v = ux(gen);
            const Param theta{ut(gen)};
            for (std::size_t col = 0; col < d; ++col) {
                const Mat jac = p.sde->diffusion_jacobian(theta, x, col);
                for (std::size_t k = 0; k < d; ++k) {
                    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
                    Vec up = x, dn = x;
                    up[k] += h;
                    dn[k] -= h;
                    const Mat su = p.sde->diffusion(theta, up), sd = p.sde->diffusion(theta, dn);
                    for (std::size_t i = 0; i < d; ++i) {
                        const double fd = (su(i, col) - sd(i, col)) / (2 * h);
                        const double scale = std::max(1e-3, std::abs(jac(i, k)));
                        worst = std::max(worst, std::abs(fd - jac(i, k)) / scale);
                    }
                }
            }
        }
        INFO(name);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("commutativity check") {
    SUBCASE("one-dimensional models commute") {
        const GbmModel m(1, 0.66, 0.7);
        const auto pts = random_points(10, 1, 0.1, 2.0, 4);
        CHECK(check_commutativity(m, Param{-1.0}, pts));
    }
    SUBCASE("all presets commute") {
        for (const auto& name : preset_names()) {
            const ModelPreset p = make_preset(name);
            const auto pts = random_points(100, p.sde->dim(), 0.1, 3.0, 5);
            INFO(name);
            CHECK(check_commutativity(*p.sde, p.theta_star, pts));
        }
    }
    SUBCASE("sigma = [[1, x1], [0, 1]] does not commute at (1, 1)") {
        const FunctionModel m(
            Vec{1.0, 1.0}, [](const Param&, const Vec&) { return Vec(2); },
            [](const Param&, const Vec& x) {
                Mat s = Mat::identity(2, 1.0);
                s(0, 1) = x[0];
                return s;
            },
            [](const Param&, const Vec&, std::size_t col) {
                Mat j(2);
                if (col == 1) j(0, 0) = 1.0;
                return j;
            });
        const std::vector<Vec> pts{Vec{1.0, 1.0}};
        CHECK_FALSE(check_commutativity(m, Param{0.0}, pts));
    }
}

TEST_CASE("rk4 commutation condition") {
    SUBCASE("zero drift and constant diffusion") {
        const auto m = make_linear_model(1, 0.0, 0.8, Vec{0.0});
        const auto pts = random_points(10, 1, -2.0, 2.0, 6);
        CHECK(check_rk4_condition(*m, Param{0.0}, pts));
    }
    SUBCASE("gbm satisfies it") {
        const GbmModel m(1, 0.66, 0.7);
        const auto pts = random_points(100, 1, 0.1, 3.0, 7);
        CHECK(check_rk4_condition(m, Param{-1.8971}, pts));
    }
    SUBCASE("the nonlinear marginal violates it at x = 1") {
        const NonlinearModel m(1.0, Vec{1.0});
        const std::vector<Vec> pts{Vec{1.0}};
        CHECK_FALSE(check_rk4_condition(m, Param{1.0}, pts));
    }
    SUBCASE("defined for d = 1 only") {
        const NonlinearModel m(1.0, Vec{1.0, 1.0});
        const std::vector<Vec> pts{Vec{1.0, 1.0}};
        CHECK_THROWS_AS(check_rk4_condition(m, Param{1.0}, pts), UnsupportedDimension);
    }
}

TEST_CASE("generate_data") {
    SUBCASE("gbm1d paper settings give 120 finite observations") {
        const ModelPreset p = make_preset("gbm1d");
        const Dataset d = generate_data(*p.sde, *p.obs, p.theta_star, 120, 8, 42);
        CHECK(d.size() == 120);
        CHECK(d.delta == doctest::Approx(1.0 / 120));
        CHECK(d.times.back() == doctest::Approx(1.0));
        for (const Vec& y : d.observations) CHECK(y.all_finite());
    }
    SUBCASE("same seed is bit-identical, different seed differs") {
        const ModelPreset p = make_preset("gbm3d");
        const Dataset a = generate_data(*p.sde, *p.obs, p.theta_star, 30, 6, 9);
        const Dataset b = generate_data(*p.sde, *p.obs, p.theta_star, 30, 6, 9);
        const Dataset c = generate_data(*p.sde, *p.obs, p.theta_star, 30, 6, 10);
        CHECK(a.observations == b.observations);
        CHECK(a.times == b.times);
        CHECK_FALSE(a.observations == c.observations);
    }
    SUBCASE("noise-free identity observations equal the simulated states") {
        const ModelPreset p = make_preset("nonlinear2d");
        const testing::NoiselessObservation obs(2);
        const std::size_t K = 20;
        const int level = 5;
        const Dataset d = generate_data(*p.sde, obs, p.theta_star, K, level, 3);
        const Scheme rk4 = make_scheme("rk4");
        const RngStream root = RngStream(3).derive(StreamPurpose::data);
        Vec x = p.sde->initial_state();
        for (std::size_t k = 0; k < K; ++k) {
            RngStream rng = root.derive(StreamPurpose::propagate, k);
            x = simulate_interval(rk4, *p.sde, p.theta_star, x, sample_increments(level, 1.0 / K, 2, rng));
            CHECK(d.observations[k] == x);
        }
    }
    SUBCASE("round trip through csv and json") {
        const ModelPreset p = make_preset("gbm1d");
        const Dataset d = generate_data(*p.sde, *p.obs, p.theta_star, 15, 4, 5);
        const auto dir = std::filesystem::temp_directory_path() / "mlsrk_test_model";
        std::filesystem::create_directories(dir);
        write_dataset(d, (dir / "d.csv").string(), (dir / "d.json").string());
        const Dataset r = read_dataset((dir / "d.csv").string(), (dir / "d.json").string());
        CHECK(r.observations == d.observations);
        CHECK(r.times == d.times);
        CHECK(r.seed == d.seed);
        CHECK(r.model_name == "gbm1d");
        CHECK(r.generation_level == 4);
        std::filesystem::remove_all(dir);
    }
    SUBCASE("zero observations rejected") {
        const ModelPreset p = make_preset("gbm1d");
        CHECK_THROWS_AS(generate_data(*p.sde, *p.obs, p.theta_star, 0, 4, 5), std::invalid_argument);
    }
}

TEST_CASE("observation model and prior") {
    const GaussianObservation obs(1, ObsMap::log, 0.1);
    const double expected = -0.5 * std::log(2 * std::numbers::pi * 0.1) - 0.5 * std::pow(0.3 - std::log(2.0), 2) / 0.1;
    CHECK(obs.log_density(Param{0.0}, Vec{0.3}, Vec{2.0}) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(obs.log_density_upper_bound() >= obs.log_density(Param{0.0}, Vec{0.3}, Vec{2.0}));
    // Non-positive states clamp instead of producing NaN.
    CHECK(std::isfinite(obs.log_density(Param{0.0}, Vec{0.3}, Vec{-1.0})));
    CHECK_THROWS_AS(GaussianObservation(1, ObsMap::log, 0.0), std::invalid_argument);

    const GaussianPrior prior(-1.4, 0.2);
    CHECK(prior.log_pdf(Param{-1.4}) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * 0.2)));
    CHECK_THROWS_AS(GaussianPrior(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("presets") {
    CHECK(make_preset("gbm1d").sde->dim() == 1);
    CHECK(make_preset("gbm3d").sde->dim() == 3);
    CHECK(make_preset("nonlinear2d").sde->dim() == 2);
    CHECK(make_preset("gbm1d").theta_star[0] == -1.8971);
    CHECK_THROWS_AS(make_preset("ou"), std::invalid_argument);
}

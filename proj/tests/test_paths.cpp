#include <cmath>

#include "doctest.h"
#include "mlsrk/paths.hpp"
#include "mlsrk/rng.hpp"

using namespace mlsrk;

namespace {

BrownianIncrements from_values(int level, double interval, std::size_t dim, std::initializer_list<double> v) {
    BrownianIncrements b(level, interval, dim);
    std::copy(v.begin(), v.end(), b.values().begin());
    return b;
}

}  // namespace

TEST_CASE("rng streams") {
    const RngStream root(5);
    RngStream a = root.derive(StreamPurpose::filter, 3), b = root.derive(StreamPurpose::filter, 3);
    RngStream c = root.derive(StreamPurpose::filter, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs |= x != c();
    }
    CHECK(differs);
    RngStream u(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("sample_increments") {
    SUBCASE("level 0 is one vector with variance delta") {
        const double delta = 0.25;
        double ss = 0.0;
        const int n = 100000;
        RngStream rng(1);
        BrownianIncrements b;
        for (int i = 0; i < n; ++i) {
            sample_increments_into(b, 0, delta, 2, rng);
            REQUIRE(b.steps() == 1);
            ss += b.values()[0] * b.values()[0];
        }
        const double var = ss / n;
        CHECK(std::abs(var - delta) < 5 * delta * std::sqrt(2.0 / n));
    }
    SUBCASE("level 3 on a unit interval has variance 1/8") {
        RngStream rng(2);
        double ss = 0.0, s = 0.0;
        const int n = 100000;
        int count = 0;
        BrownianIncrements b;
        while (count < n) {
            sample_increments_into(b, 3, 1.0, 1, rng);
            for (double v : b.values()) {
                s += v;
                ss += v * v;
                ++count;
            }
        }
        const double mean = s / count;
        const double var = ss / count - mean * mean;
        CHECK(var == doctest::Approx(0.125).epsilon(0.04));
        CHECK(std::abs(var - 0.125) < 0.005);
    }
    SUBCASE("same stream key twice gives identical arrays") {
        RngStream r1 = RngStream(7).derive(StreamPurpose::propagate, 2, 9);
        RngStream r2 = RngStream(7).derive(StreamPurpose::propagate, 2, 9);
        const auto a = sample_increments(5, 0.1, 3, r1);
        const auto b = sample_increments(5, 0.1, 3, r2);
        CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
    }
    SUBCASE("shape") {
        RngStream rng(3);
        const auto b = sample_increments(4, 0.5, 2, rng);
        CHECK(b.steps() == 16);
        CHECK(b.values().size() == 32);
        CHECK(b.step_size() == 0.5 / 16);
    }
}

TEST_CASE("coarsen") {
    SUBCASE("pairwise sums") {
        const auto fine = from_values(2, 1.0, 1, {0.1, -0.2, 0.3, 0.05});
        const auto coarse = coarsen(fine);
        REQUIRE(coarse.level() == 1);
        CHECK(coarse.values()[0] == doctest::Approx(-0.1).epsilon(1e-15));
        CHECK(coarse.values()[1] == doctest::Approx(0.35).epsilon(1e-15));
        CHECK(coarse.values()[0] == 0.1 + -0.2);
        CHECK(coarse.values()[1] == 0.3 + 0.05);
    }
    SUBCASE("zeros stay zero") {
        const BrownianIncrements fine(4, 1.0, 3);
        const auto coarse = coarsen(fine);
        for (double v : coarse.values()) CHECK(v == 0.0);
    }
    SUBCASE("componentwise in several dimensions") {
        const auto fine = from_values(1, 1.0, 2, {1.0, 10.0, 2.0, 20.0});
        const auto coarse = coarsen(fine);
        CHECK(coarse.values()[0] == 3.0);
        CHECK(coarse.values()[1] == 30.0);
        CHECK(coarse.interval() == 1.0);
    }
    SUBCASE("level 0 cannot be coarsened") {
        const BrownianIncrements fine(0, 1.0, 1);
        CHECK_THROWS_AS(coarsen(fine), std::invalid_argument);
    }
    SUBCASE("coarse variance is twice the fine variance") {
        RngStream rng(4);
        const int n = 100000;
        double sf = 0.0, sc = 0.0;
        BrownianIncrements fine, coarse;
        for (int i = 0; i < n; ++i) {
            sample_increments_into(fine, 1, 1.0, 1, rng);
            coarsen_into(coarse, fine);
            sf += fine.values()[0] * fine.values()[0];
            sc += coarse.values()[0] * coarse.values()[0];
        }
        const double vf = sf / n, vc = sc / n;
        // Var(vc) ~ 2 (2 vf)^2 / n
        CHECK(std::abs(vc - 2 * vf) < 5 * std::sqrt(2.0 / n) * 1.0);
    }
}

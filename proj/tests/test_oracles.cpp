#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fracdiff/oracles.hpp"
#include "fracdiff/specfun.hpp"
#include "oracle_utils.hpp"

using fracdiff::absorbing_series;
using fracdiff::mode_decay;
using fracdiff::propagator;
namespace frozen = testoracle::frozen;

TEST_CASE("propagator: frozen reference points") {
    REQUIRE_THAT(propagator(0.0, 1.0, 0.5, 1.0),
                 Catch::Matchers::WithinAbs(frozen::prop_origin_g05, 1e-13));
    REQUIRE_THAT(propagator(0.0, 1.0, 1.0, 1.0),
                 Catch::Matchers::WithinAbs(frozen::prop_gauss_origin, 1e-13));
    REQUIRE_THAT(propagator(2.0, 1.0, 1.0, 1.0),
                 Catch::Matchers::WithinAbs(frozen::prop_gauss_x2, 1e-13));
    REQUIRE_THAT(propagator(1.0, 2.0, 0.5, 1.0),
                 Catch::Matchers::WithinAbs(frozen::prop_g05_x1_t2, 1e-13));
    REQUIRE_THAT(propagator(0.0, 0.25, 0.75, 2.0),
                 Catch::Matchers::WithinAbs(frozen::prop_g075_K2, 1e-13));
}

TEST_CASE("propagator: even in x, exactly") {
    for (double x : {0.25, 1.0, 2.5, 4.0}) {
        REQUIRE(propagator(x, 1.3, 0.6, 1.0) == propagator(-x, 1.3, 0.6, 1.0));
    }
}

TEST_CASE("propagator: matches the Gaussian kernel when the order is one") {
    const double t = 0.7;
    const double K = 1.0;
    double worst = 0.0;
    for (int i = -40; i <= 40; ++i) {
        const double x = 0.1 * i;
        const double ref = std::exp(-x * x / (4.0 * K * t)) / std::sqrt(4.0 * M_PI * K * t);
        worst = std::max(worst, std::fabs(propagator(x, t, 1.0, K) - ref));
    }
    REQUIRE(worst < 1e-13);
}

TEST_CASE("propagator: unit mass") {
    for (double g : {0.5, 0.75, 1.0}) {
        const double sigma = std::sqrt(std::pow(1.0, 0.5) * std::pow(0.8, g));
        const double L = 10.0 * sigma;
        // trapezoid over [-L, L]; integrand is smooth except the origin kink
        const int n = 4000;
        const double h = 2.0 * L / n;
        double mass = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = -L + i * h;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            mass += w * propagator(x, 0.8, g, 1.0);
        }
        mass *= h;
        REQUIRE_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-4));
    }
}

TEST_CASE("propagator: second moment follows the subdiffusive law") {
    for (double g : {0.5, 0.75, 1.0}) {
        const double t = 2.0;
        const double K = 1.0;
        const double sigma = std::sqrt(K * std::pow(t, g));
        const double L = 10.0 * sigma;
        const int n = 6000;
        const double h = 2.0 * L / n;
        double m0 = 0.0;
        double m2 = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = -L + i * h;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            const double u = propagator(x, t, g, K);
            m0 += w * u;
            m2 += w * x * x * u;
        }
        const double expected = 2.0 * K * std::pow(t, g) / fracdiff::real_gamma(1.0 + g);
        REQUIRE_THAT(m2 / m0, Catch::Matchers::WithinRel(expected, 1e-2));
    }
}

TEST_CASE("propagator: rejects non-positive time") {
    REQUIRE_THROWS_AS(propagator(0.0, 0.0, 0.5, 1.0), fracdiff::domain_error);
    REQUIRE_THROWS_AS(propagator(0.0, -1.0, 0.5, 1.0), fracdiff::domain_error);
}

TEST_CASE("absorbing_series: boundary, initial data, frozen points") {
    REQUIRE(absorbing_series(0.0, 0.5, 0.75, 1.0) == 0.0);
    REQUIRE_THAT(absorbing_series(0.5, 0.0, 0.6, 1.0),
                 Catch::Matchers::WithinAbs(0.25, 1e-6));
    REQUIRE_THAT(absorbing_series(0.5, 0.5, 1.0, 1.0),
                 Catch::Matchers::WithinAbs(frozen::absorb_g1_mid, 1e-12));
    REQUIRE_THAT(absorbing_series(0.3, 0.2, 0.75, 1.0),
                 Catch::Matchers::WithinAbs(frozen::absorb_g075_x03, 1e-12));
}

TEST_CASE("absorbing_series: order-one case matches the classical heat series") {
    // independent test-side evaluation of the same separated solution using
    // plain exponential factors
    auto heat_ref = [](double x, double t) {
        double acc = 0.0;
        for (int k = 49; k >= 1; k -= 2) {
            const double kk = static_cast<double>(k);
            acc += std::exp(-kk * kk * M_PI * M_PI * t) / (kk * kk * kk)
                   * std::sin(kk * M_PI * x);
        }
        return 8.0 / (M_PI * M_PI * M_PI) * acc;
    };
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double x = 0.05 * i;
        for (double t : {0.01, 0.1, 0.5}) {
            worst = std::max(worst,
                             std::fabs(absorbing_series(x, t, 1.0, 1.0) - heat_ref(x, t)));
        }
    }
    REQUIRE(worst < 1e-10);
}

TEST_CASE("absorbing_series: truncation at 25 terms is converged for t >= 0.01") {
    for (double g : {0.5, 0.75}) {
        double worst = 0.0;
        for (int i = 0; i <= 20; ++i) {
            const double x = 0.05 * i;
            worst = std::max(worst, std::fabs(absorbing_series(x, 0.01, g, 1.0, 25)
                                              - absorbing_series(x, 0.01, g, 1.0, 50)));
        }
        REQUIRE(worst < 5e-9);
    }
    double worst1 = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double x = 0.05 * i;
        worst1 = std::max(worst1, std::fabs(absorbing_series(x, 0.01, 1.0, 1.0, 25)
                                            - absorbing_series(x, 0.01, 1.0, 1.0, 50)));
    }
    REQUIRE(worst1 < 1e-12);
}

TEST_CASE("absorbing_series: domain validation") {
    REQUIRE_THROWS_AS(absorbing_series(0.5, -0.1, 0.5, 1.0), fracdiff::domain_error);
    REQUIRE_THROWS_AS(absorbing_series(0.5, 0.5, 1.5, 1.0), fracdiff::domain_error);
    REQUIRE_THROWS_AS(absorbing_series(0.5, 0.5, 0.5, -1.0), fracdiff::domain_error);
}

TEST_CASE("mode_decay: initial value and frozen references") {
    REQUIRE(mode_decay(1, 0.0, 0.6, 1.0) == 1.0);
    REQUIRE_THAT(mode_decay(1, 0.1, 1.0, 1.0),
                 Catch::Matchers::WithinAbs(frozen::mode1_g1_t01, 1e-12));
    REQUIRE_THAT(mode_decay(1, 0.5, 0.5, 1.0),
                 Catch::Matchers::WithinAbs(frozen::mode1_g05_t05, 2e-11));
}

TEST_CASE("mode_decay: second mode cross-checks against direct evaluations") {
    // with K = 1 and t = 0.1 the mode-2 argument is 4 pi^2 sqrt(0.1)
    const double arg = 4.0 * M_PI * M_PI * std::sqrt(0.1);
    REQUIRE_THAT(arg, Catch::Matchers::WithinRel(frozen::ml_half_mode2_arg, 1e-14));
    const double v = mode_decay(2, 0.1, 0.5, 1.0);
    REQUIRE_THAT(v, Catch::Matchers::WithinAbs(frozen::ml_half_mode2, 5e-12));
    const double y = frozen::ml_half_mode2_arg;
    REQUIRE_THAT(v, Catch::Matchers::WithinAbs(std::exp(y * y) * std::erfc(y), 1e-8));
}

TEST_CASE("mode_decay: domain validation") {
    REQUIRE_THROWS_AS(mode_decay(0, 0.5, 0.5, 1.0), fracdiff::domain_error);
    REQUIRE_THROWS_AS(mode_decay(-2, 0.5, 0.5, 1.0), fracdiff::domain_error);
    REQUIRE_THROWS_AS(mode_decay(1, -0.5, 0.5, 1.0), fracdiff::domain_error);
}

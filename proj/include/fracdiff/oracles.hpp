#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "fracdiff/errors.hpp"
#include "fracdiff/kahan.hpp"
#include "fracdiff/specfun.hpp"

namespace fracdiff {

namespace detail {

inline void check_gamma_K(double gamma, double K, const char* who) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw domain_error(std::string(who) + ": exponent must lie in (0, 1], got " +
                           std::to_string(gamma));
    }
    if (!(K > 0.0)) {
        throw domain_error(std::string(who) + ": diffusion coefficient must be > 0, got " +
                           std::to_string(K));
    }
}

}  // namespace detail

// Free-space Green's function for a unit delta release at the origin:
//   u(x, t) = M_{gamma/2}(|x| / sqrt(K t^gamma)) / (2 sqrt(K t^gamma)).
// Symmetric in x, integrates to 1, and reduces to the Gaussian
// exp(-x^2/4Kt)/sqrt(4 pi K t) at gamma = 1. The scaled argument must stay
// within the Wright evaluator's range; beyond it the call rejects rather than
// returning a silently inaccurate tail.
inline double propagator(double x, double t, double gamma, double K) {
    detail::check_gamma_K(gamma, K, "propagator");
    if (!(t > 0.0)) {
        throw domain_error("propagator: time must be > 0, got " + std::to_string(t));
    }
    const double sigma = std::sqrt(K * std::pow(t, gamma));
    return wright_m(0.5 * gamma, std::fabs(x) / sigma) / (2.0 * sigma);
}

// Series solution on [0, 1] with absorbing (zero) ends for the parabolic
// initial profile u(x, 0) = x(1 - x):
//   u(x, t) = (8/pi^3) Sum_{n>=0} sin((2n+1) pi x) E_gamma(-K (2n+1)^2 pi^2 t^gamma) / (2n+1)^3.
// At t = 0 this is the (cubically convergent) Fourier series of x(1 - x).
inline double absorbing_series(double x, double t, double gamma, double K,
                               std::size_t n_terms = 50) {
    detail::check_gamma_K(gamma, K, "absorbing_series");
    if (!(x >= 0.0 && x <= 1.0)) {
        throw domain_error("absorbing_series: position must lie in [0, 1], got " +
                           std::to_string(x));
    }
    if (!(t >= 0.0)) {
        throw domain_error("absorbing_series: time must be >= 0, got " + std::to_string(t));
    }
    if (n_terms < 1) {
        throw domain_error("absorbing_series: at least one term required");
    }
    const double tg = std::pow(t, gamma);
    kahan_sum s;
    for (std::size_t i = 0; i < n_terms; ++i) {
        const double k = 2.0 * static_cast<double>(i) + 1.0;
        const double amp = mittag_leffler_neg(gamma, K * k * k * M_PI * M_PI * tg);
        s.add(std::sin(k * M_PI * x) * amp / (k * k * k));
    }
    return 8.0 / (M_PI * M_PI * M_PI) * s.value();
}

// Amplitude factor of the absorbing-domain eigenmode sin(n pi x) at time t:
// E_gamma(-K n^2 pi^2 t^gamma). Exponential decay at gamma = 1, algebraic
// Mittag-Leffler decay below it.
inline double mode_decay(int n, double t, double gamma, double K) {
    detail::check_gamma_K(gamma, K, "mode_decay");
    if (n < 1) {
        throw domain_error("mode_decay: mode index must be >= 1, got " + std::to_string(n));
    }
    if (!(t >= 0.0)) {
        throw domain_error("mode_decay: time must be >= 0, got " + std::to_string(t));
    }
    const double nn = static_cast<double>(n);
    return mittag_leffler_neg(gamma, K * nn * nn * M_PI * M_PI * std::pow(t, gamma));
}

}  // namespace fracdiff

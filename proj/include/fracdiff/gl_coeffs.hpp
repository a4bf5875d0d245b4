#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/kahan.hpp"

namespace fracdiff {

// Memory weights of the fractional-difference operator: the power-series
// coefficients of (1 - z)^alpha (order 1) or of (3/2 - 2z + z^2/2)^alpha
// (order 2). The solver convolves these against the Laplacian history; the
// stability bounds are built from their alternating partial sums.
struct coefficient_table {
    double alpha = 0.0;
    int order = 1;
    std::vector<double> w;  // w[k], k = 0..n

    [[nodiscard]] std::size_t size() const noexcept { return w.size(); }
    [[nodiscard]] double operator[](std::size_t k) const noexcept { return w[k]; }
};

namespace detail {

inline void check_coeff_args(double alpha, int order) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw domain_error("coefficient order alpha must lie in [0, 1], got " +
                           std::to_string(alpha));
    }
    if (order != 1 && order != 2) {
        throw domain_error("approximation order must be 1 or 2, got " +
                           std::to_string(order));
    }
}

}  // namespace detail

// Weights of (1 - z)^alpha via the downward recurrence
//   w_0 = 1,  w_k = (1 - (alpha + 1)/k) * w_{k-1},
// which equals (-1)^k * binomial(alpha, k). Exact zeros appear for integer
// alpha, so the classical limit (alpha = 0) degenerates to the identity
// weight and nothing else.
inline coefficient_table first_order_coeffs(double alpha, std::size_t n) {
    detail::check_coeff_args(alpha, 1);
    coefficient_table t{alpha, 1, {}};
    t.w.resize(n + 1);
    t.w[0] = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        t.w[k] = (1.0 - (alpha + 1.0) / static_cast<double>(k)) * t.w[k - 1];
    }
    return t;
}

// Weights of (3/2 - 2z + z^2/2)^alpha via the power-of-a-series (Miller)
// recurrence: for g = f^alpha with f = a0 + a1 z + a2 z^2,
//   g_0 = a0^alpha,
//   g_k = [ a1 (alpha + 1 - k) g_{k-1} + a2 (2(alpha + 1) - k) g_{k-2} ] / (a0 k).
// O(n), exact to rounding, no transforms needed.
inline coefficient_table second_order_coeffs(double alpha, std::size_t n) {
    detail::check_coeff_args(alpha, 2);
    coefficient_table t{alpha, 2, {}};
    t.w.resize(n + 1);
    t.w[0] = std::pow(1.5, alpha);
    for (std::size_t k = 1; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        double acc = -2.0 * (alpha + 1.0 - kk) * t.w[k - 1];
        if (k >= 2) {
            acc += 0.5 * (2.0 * (alpha + 1.0) - kk) * t.w[k - 2];
        }
        t.w[k] = acc / (1.5 * kk);
    }
    return t;
}

// Unified constructor over both approximation orders.
inline coefficient_table coefficients(double alpha, std::size_t n, int order) {
    detail::check_coeff_args(alpha, order);
    return order == 1 ? first_order_coeffs(alpha, n) : second_order_coeffs(alpha, n);
}

// Sum_{k=0}^{m} (-1)^k w_k, the denominator of the finite-horizon stability
// bound. Compensated because the terms alternate and cancel.
inline double alternating_partial_sum(const coefficient_table& t, std::size_t m) {
    if (m >= t.size()) {
        throw std::out_of_range("alternating_partial_sum: index " + std::to_string(m) +
                                " beyond coefficient table of size " +
                                std::to_string(t.size()));
    }
    kahan_sum s;
    double sign = 1.0;
    for (std::size_t k = 0; k <= m; ++k) {
        s.add(sign * t.w[k]);
        sign = -sign;
    }
    return s.value();
}

}  // namespace fracdiff

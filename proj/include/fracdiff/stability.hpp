#pragma once

// Stability machinery for the explicit memory scheme: the analytic bound on
// the diffusion number S, a ratio-based blowup detector, and a scanner that
// locates the empirical onset of instability by marching S upward.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/gl_coeffs.hpp"
#include "fracdiff/solver.hpp"

namespace fracdiff {

namespace detail {

inline void check_bound_args(double gamma, int order) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw domain_error("gamma must lie in (0, 1], got " + std::to_string(gamma));
    }
    if (order != 1 && order != 2) {
        throw domain_error("order must be 1 or 2");
    }
}

}  // namespace detail

// Infinite-memory stability bound on S.
inline double bound_limit(double gamma, int order) {
    detail::check_bound_args(gamma, order);
    if (order == 1) {
        return std::pow(2.0, -(2.0 - gamma));
    }
    return std::pow(4.0, -(1.5 - gamma));
}

// Finite-memory bounds: values[m] is the largest stable S when only the
// first m+1 weights act, i.e. 1 / (2 * alternating partial sum).  The
// sequence oscillates as it converges to the infinite-memory limit; its
// widest jump is the one from m = 1 to m = 2.
struct stability_bound_series {
    double gamma = 0.0;
    int order = 1;
    std::vector<double> values;
    double limit = 0.0;
};

inline stability_bound_series bound_series(double gamma, int order, long m_max) {
    detail::check_bound_args(gamma, order);
    if (m_max < 0) {
        throw domain_error("m_max must be non-negative");
    }
    const auto table = coefficients(1.0 - gamma, m_max, order);
    stability_bound_series s;
    s.gamma = gamma;
    s.order = order;
    s.limit = bound_limit(gamma, order);
    s.values.resize(static_cast<std::size_t>(m_max) + 1);
    // running alternating partial sum, reusing the same Kahan accumulation
    // the table helper applies
    for (long m = 0; m <= m_max; ++m) {
        s.values[static_cast<std::size_t>(m)] = 0.5 / alternating_partial_sum(table, m);
    }
    return s;
}

// Widest step of the finite-memory bound sequence, attained between one and
// two remembered increments.
inline double delta_S(const stability_bound_series& s) {
    if (s.values.size() < 3) {
        throw domain_error("delta_S needs the series through m = 2");
    }
    return s.values[2] - s.values[1];
}

struct detector_options {
    double xi = 5.0;  // ratio threshold: fire when |u(m-1)/u(m) - xi| > xi
    long dm = 10;     // number of trailing steps that must all violate
};

// Core ratio test on a row window (each row is one time level, any width;
// columns whose denominators vanish are skipped).  Fires when some column
// violates the ratio condition at every defined trailing step, with at least
// ceil(dm/2) of them defined.
inline bool detect_instability_rows(const std::vector<std::vector<double>>& rows,
                                    const detector_options& opt = {}) {
    if (opt.dm < 1 || !(opt.xi > 0.0)) {
        throw domain_error("detector needs dm >= 1 and xi > 0");
    }
    const long need = opt.dm + 2;  // dm+1 ratios take dm+2 rows
    if (static_cast<long>(rows.size()) < need) {
        throw domain_error("detector needs at least " + std::to_string(need) + " rows");
    }
    const std::size_t first = rows.size() - static_cast<std::size_t>(need);
    const std::size_t width = rows[first].size();
    for (std::size_t r = first; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw domain_error("detector rows must have equal width");
        }
    }
    const long min_defined = (opt.dm + 1) / 2;
    for (std::size_t j = 0; j < width; ++j) {
        long defined = 0;
        bool all_violate = true;
        for (std::size_t r = first + 1; r < rows.size(); ++r) {
            const double denom = rows[r][j];
            if (denom == 0.0) {
                continue;  // undefined ratio: does not count either way
            }
            ++defined;
            const double ratio = rows[r - 1][j] / denom;
            if (!(std::fabs(ratio - opt.xi) > opt.xi)) {
                all_violate = false;
                break;
            }
        }
        if (all_violate && defined >= min_defined) {
            return true;
        }
    }
    return false;
}

// Trajectory-level detector: an overflow-truncated run is unstable outright;
// otherwise the trailing window of stored rows is examined.
inline bool detect_instability(const trajectory& tr, const detector_options& opt = {}) {
    if (tr.unstable) {
        return true;
    }
    if (tr.steps < opt.dm + 1) {
        throw domain_error("detector needs at least " + std::to_string(opt.dm + 1) +
                           " completed steps, have " + std::to_string(tr.steps));
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(opt.dm) + 2);
    for (long i = tr.steps - opt.dm - 1; i <= tr.steps; ++i) {
        rows.push_back(tr.history.snapshot_copy(i));
    }
    return detect_instability_rows(rows, opt);
}

struct stability_report {
    double gamma = 0.0;
    double S_tested = 0.0;         // the S value under test (the firing one)
    long M = 0;                    // step budget per probe run
    bool unstable = false;
    long first_unstable_step = -1; // overflow step if any, otherwise M
    double S_min = 0.0;            // smallest S that fired
    double sin2_correction = 0.0;  // finite-mesh factor sin^2((2N-1)pi/(4N))
};

enum class scan_problem { absorbing, propagator };

struct scan_options {
    long M = 1000;               // steps per probe
    double scan_step = 1e-3;     // S increment
    double start_factor = 0.98;  // first probe at start_factor * analytic limit
    int coeff_order = 1;
    double K = 1.0;
    long N = 5;                  // absorbing problem: 2N-1 interior nodes
    double dt_propagator = 5e-4; // propagator problem: fixed dt, dx from S
    long propagator_half = 50;   // propagator problem: cells per half width
    detector_options detector{};
};

// Finite-mesh correction that maps an onset measured with 2N-1 interior
// nodes onto the infinite-mesh bound.
inline double sin2_correction_factor(long N) {
    if (N < 1) {
        throw domain_error("sin2 correction needs N >= 1");
    }
    const double s = std::sin(static_cast<double>(2 * N - 1) * M_PI /
                              (4.0 * static_cast<double>(N)));
    return s * s;
}

// Marches S upward from just below the analytic limit until the detector
// fires, and reports the first firing S.  Throws if S reaches 1 without any
// instability, which signals a broken setup rather than a stable scheme.
inline stability_report onset_scan(double gamma, scan_problem which,
                                   const scan_options& opt = {}) {
    detail::check_bound_args(gamma, opt.coeff_order);
    if (!(opt.scan_step > 0.0) || !(opt.start_factor > 0.0) || opt.M < opt.detector.dm + 2) {
        throw domain_error("scan needs positive step, positive start factor, and "
                           "M >= dm + 2");
    }
    const double S_theory = bound_limit(gamma, opt.coeff_order);
    const long half = (which == scan_problem::absorbing) ? opt.N : opt.propagator_half;

    stability_report rep;
    rep.gamma = gamma;
    rep.M = opt.M;
    rep.sin2_correction = sin2_correction_factor(half);

    for (long n = 0;; ++n) {
        const double S = opt.start_factor * S_theory +
                         static_cast<double>(n) * opt.scan_step;
        if (S > 1.0) {
            throw domain_error("stability scan reached S = 1 without detecting onset");
        }
        problem pr;
        scheme_params p;
        p.gamma = gamma;
        p.K = opt.K;
        p.coeff_order = opt.coeff_order;
        if (which == scan_problem::absorbing) {
            pr = make_absorbing_problem(opt.N);
            p.dx = pr.grid.dx();
            p.dt = dt_from_S(S, p.dx, gamma, opt.K);
        } else {
            pr = make_propagator_problem(gamma, S, opt.dt_propagator, opt.K,
                                         opt.propagator_half);
            p.dx = pr.grid.dx();
            p.dt = opt.dt_propagator;
        }
        auto tr = solve_steps(pr, p, opt.M);
        if (detect_instability(tr, opt.detector)) {
            rep.S_tested = S;
            rep.S_min = S;
            rep.unstable = true;
            rep.first_unstable_step = tr.log.overflow ? tr.log.overflow_step : opt.M;
            return rep;
        }
    }
}

}  // namespace fracdiff

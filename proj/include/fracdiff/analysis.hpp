#pragma once

// Post-processing: error norms against a reference profile, distribution
// moments of a field row, and mesh-refinement order fits.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/kahan.hpp"
#include "fracdiff/oracles.hpp"
#include "fracdiff/solver.hpp"

namespace fracdiff {

struct error_report {
    double l_inf = 0.0;
    double l2 = 0.0;      // sqrt(dx * sum e^2): mesh-weighted, refinement-comparable
    long n_nodes = 0;     // interior nodes entering the norms
    double t = 0.0;       // time the compared row belongs to
};

// Compares the interior of a full-width row against exact(x) on the mesh.
inline error_report error_norms(const std::vector<double>& row, const grid1d& g, double t,
                                const std::function<double(double)>& exact) {
    g.validate();
    if (row.size() != static_cast<std::size_t>(g.n_interior) + 2) {
        throw domain_error("row width does not match the grid");
    }
    error_report rep;
    rep.n_nodes = g.n_interior;
    rep.t = t;
    kahan_sum sq;
    for (long j = 1; j <= g.n_interior; ++j) {
        const double e = row[static_cast<std::size_t>(j)] - exact(g.x(j));
        rep.l_inf = std::max(rep.l_inf, std::fabs(e));
        sq.add(e * e);
    }
    rep.l2 = std::sqrt(g.dx() * sq.value());
    return rep;
}

// Second moment sum x^2 u dx / sum u dx over the interior nodes.
inline double second_moment(const std::vector<double>& row, const grid1d& g) {
    g.validate();
    if (row.size() != static_cast<std::size_t>(g.n_interior) + 2) {
        throw domain_error("row width does not match the grid");
    }
    kahan_sum mass;
    kahan_sum weighted;
    for (long j = 1; j <= g.n_interior; ++j) {
        const double x = g.x(j);
        mass.add(row[static_cast<std::size_t>(j)]);
        weighted.add(x * x * row[static_cast<std::size_t>(j)]);
    }
    if (mass.value() == 0.0) {
        throw domain_error("second moment undefined: the row carries no mass");
    }
    return weighted.value() / mass.value();
}

// Least-squares slope of log(err) against log(dx).
inline double log_log_slope(const std::vector<double>& dx, const std::vector<double>& err) {
    if (dx.size() != err.size() || dx.size() < 2) {
        throw domain_error("slope fit needs two or more (dx, err) pairs");
    }
    const std::size_t n = dx.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(dx[i] > 0.0) || !(err[i] > 0.0)) {
            throw domain_error("slope fit needs positive dx and err values");
        }
        lx[i] = std::log(dx[i]);
        ly[i] = std::log(err[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

struct convergence_result {
    std::vector<double> dx;
    std::vector<double> dt;
    std::vector<double> t_snap;  // realized measurement time per level
    std::vector<double> l_inf;
    std::vector<double> l2;
    double order = 0.0;          // fitted log-log slope of l_inf against dx
};

// Refinement study on the unit-interval absorbing problem with the parabolic
// arch start: for each mesh the diffusion number is held at S, the run stops
// at the step nearest t_measure, and the row is compared against the
// separated-series solution evaluated at the realized time.
inline convergence_result convergence_order(double gamma, double S,
                                            const std::vector<double>& dx_list,
                                            double t_measure, double K = 1.0,
                                            int coeff_order = 1) {
    if (dx_list.size() < 3) {
        throw domain_error("refinement study needs at least three mesh levels");
    }
    for (std::size_t i = 1; i < dx_list.size(); ++i) {
        if (!(dx_list[i] < dx_list[i - 1])) {
            throw domain_error("mesh levels must be strictly decreasing");
        }
    }
    if (!(t_measure > 0.0)) {
        throw domain_error("t_measure must be positive");
    }

    convergence_result res;
    for (double dx_req : dx_list) {
        auto pr = make_absorbing_problem_dx(dx_req);
        scheme_params p;
        p.gamma = gamma;
        p.K = K;
        p.coeff_order = coeff_order;
        p.dx = pr.grid.dx();
        p.dt = dt_from_S(S, p.dx, gamma, K);
        const long M = std::lround(t_measure / p.dt);
        if (M < 1) {
            throw domain_error("t_measure is below one time step at dx = " +
                               std::to_string(dx_req));
        }
        auto tr = solve_steps(pr, p, M);
        if (tr.unstable) {
            throw domain_error("refinement run went unstable at dx = " +
                               std::to_string(dx_req));
        }
        const double t_snap = static_cast<double>(M) * p.dt;
        auto rep = error_norms(tr.history.snapshot_copy(M), pr.grid, t_snap,
                               [&](double x) {
                                   return absorbing_series(x, t_snap, gamma, K, 50);
                               });
        res.dx.push_back(p.dx);
        res.dt.push_back(p.dt);
        res.t_snap.push_back(t_snap);
        res.l_inf.push_back(rep.l_inf);
        res.l2.push_back(rep.l2);
    }
    res.order = log_log_slope(res.dx, res.l_inf);
    return res;
}

}  // namespace fracdiff

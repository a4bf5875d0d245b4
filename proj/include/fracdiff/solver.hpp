#pragma once

// Explicit time stepper for the subdiffusion equation on a 1-D interval with
// zero-value boundaries.  The scheme advances the field with a memory
// convolution: the update at step m adds S times a weighted sum of the
// discrete Laplacians of all stored past states, the weights being the
// fractional-difference coefficients from gl_coeffs.hpp.  With order one
// weights and gamma = 1 the weight list collapses to {1, 0, 0, ...} and the
// stepper reduces, bit for bit, to the classical explicit heat scheme.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/gl_coeffs.hpp"
#include "fracdiff/kahan.hpp"

namespace fracdiff {

// Mesh and scheme parameters.  dt is the single source of truth for the time
// step; the dimensionless diffusion number S is always derived from it.
struct scheme_params {
    double gamma = 1.0;    // anomalous diffusion exponent, in (0, 1]
    double K = 1.0;        // generalized diffusion coefficient
    double dx = 0.0;       // mesh spacing
    double dt = 0.0;       // time step
    int coeff_order = 1;   // accuracy order of the memory weights, 1 or 2
    long short_memory = 0; // 0 = full memory, otherwise >= 2 recent steps kept

    double S() const { return K * std::pow(dt, gamma) / (dx * dx); }

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0)) {
            throw domain_error("gamma must lie in (0, 1], got " + std::to_string(gamma));
        }
        if (!(K > 0.0)) {
            throw domain_error("K must be positive");
        }
        if (!(dx > 0.0)) {
            throw domain_error("dx must be positive");
        }
        if (!(dt > 0.0)) {
            throw domain_error("dt must be positive");
        }
        if (coeff_order != 1 && coeff_order != 2) {
            throw domain_error("coeff_order must be 1 or 2");
        }
        if (short_memory != 0 && short_memory < 2) {
            throw domain_error("short_memory must be 0 (full) or at least 2");
        }
    }
};

// Time step that realizes a requested diffusion number S on a given mesh.
inline double dt_from_S(double S, double dx, double gamma, double K) {
    if (!(S > 0.0) || !(dx > 0.0) || !(gamma > 0.0) || !(K > 0.0)) {
        throw domain_error("dt_from_S requires positive S, dx, gamma, K");
    }
    return std::pow(S * dx * dx / K, 1.0 / gamma);
}

// Uniform mesh on [xmin, xmax] with n_interior interior nodes; the two
// boundary nodes carry the fixed zero values.  Full node index j runs from 0
// to n_interior + 1 and x(j) = xmin + j * dx.
struct grid1d {
    double xmin = 0.0;
    double xmax = 1.0;
    long n_interior = 0;

    double dx() const { return (xmax - xmin) / static_cast<double>(n_interior + 1); }
    double x(long j) const { return xmin + static_cast<double>(j) * dx(); }

    void validate() const {
        if (!(xmax > xmin)) {
            throw domain_error("grid requires xmax > xmin");
        }
        if (n_interior < 1) {
            throw domain_error("grid requires at least one interior node");
        }
    }
};

// Stored trajectory of the field.  Snapshot rows have width n_interior + 2
// (boundary zeros stored explicitly); Laplacian rows have width n_interior.
// Both sequences always have the same number of rows, and each Laplacian row
// is computed from its snapshot at push time with the fixed expression
// U[j-1] - 2*U[j] + U[j+1].
class field_history {
  public:
    explicit field_history(long n_interior) : n_(n_interior) {
        if (n_ < 1) {
            throw domain_error("field_history requires at least one interior node");
        }
    }

    long n_interior() const { return n_; }
    long rows() const { return static_cast<long>(snapshots_.size() / row_width()); }
    std::size_t row_width() const { return static_cast<std::size_t>(n_) + 2; }

    // Appends a full-width row (boundaries included) and its Laplacian.
    void push(const double* row) {
        snapshots_.insert(snapshots_.end(), row, row + row_width());
        const std::size_t base = laplacians_.size();
        laplacians_.resize(base + static_cast<std::size_t>(n_));
        double lmax = 0.0;
        for (long j = 0; j < n_; ++j) {
            const double* u = row + 1 + j;  // u points at the interior node
            const double lap = u[-1] - 2.0 * u[0] + u[1];
            laplacians_[base + static_cast<std::size_t>(j)] = lap;
            lmax = std::max(lmax, std::fabs(lap));
        }
        lap_max_.push_back(lmax);
    }

    void push(const std::vector<double>& row) {
        if (row.size() != row_width()) {
            throw domain_error("snapshot row has wrong width");
        }
        push(row.data());
    }

    const double* snapshot(long i) const { return snapshots_.data() + row_width() * i; }
    const double* laplacian(long i) const {
        return laplacians_.data() + static_cast<std::size_t>(n_) * i;
    }
    double lap_max(long i) const { return lap_max_[static_cast<std::size_t>(i)]; }

    std::vector<double> snapshot_copy(long i) const {
        const double* p = snapshot(i);
        return std::vector<double>(p, p + row_width());
    }

  private:
    long n_ = 0;
    std::vector<double> snapshots_;   // flat rows of width n_ + 2
    std::vector<double> laplacians_;  // flat rows of width n_
    std::vector<double> lap_max_;     // max |Laplacian| per row
};

namespace detail {

// Number of leading weights that are not exactly zero.  Trailing exact zeros
// (alpha = 0 or alpha = 1 weight lists) contribute nothing to the
// convolution and are skipped, which is what makes the gamma = 1 stepper run
// at classical cost.
inline long nonzero_prefix(const coefficient_table& w) {
    long p = static_cast<long>(w.size());
    while (p > 0 && w.w[static_cast<std::size_t>(p) - 1] == 0.0) {
        --p;
    }
    return p;
}

// Tail sums of |w|: abs_tail[k] = sum_{j >= k} |w_j|; used to bound the
// contribution a short-memory run drops.
inline std::vector<double> abs_tail_sums(const coefficient_table& w) {
    std::vector<double> tail(w.size() + 1, 0.0);
    for (long k = static_cast<long>(w.size()) - 1; k >= 0; --k) {
        tail[static_cast<std::size_t>(k)] =
            tail[static_cast<std::size_t>(k) + 1] + std::fabs(w[k]);
    }
    return tail;
}

}  // namespace detail

// Advances the history by one step.  Requires at least the initial row and a
// weight table covering every stored row; rows beyond the short-memory
// window (when enabled) are excluded from the convolution.
inline void step(field_history& h, const scheme_params& p, const coefficient_table& w) {
    const long m = h.rows() - 1;  // index of the current step
    if (m < 0) {
        throw domain_error("step requires an initial state in the history");
    }
    if (static_cast<long>(w.size()) < m + 1) {
        throw std::out_of_range("weight table too short: need " + std::to_string(m + 1) +
                                " entries, have " + std::to_string(w.size()));
    }
    const long n = h.n_interior();
    const double S = p.S();

    long kmax = std::min<long>(m + 1, detail::nonzero_prefix(w));
    if (p.short_memory > 0) {
        kmax = std::min(kmax, p.short_memory);
    }

    // Convolution over the Laplacian rows i = m-kmax+1 .. m (weight w[m-i]),
    // oldest first so the flat storage is walked forward.  Plain partial sums
    // within fixed-size blocks are folded into a compensated accumulator
    // between blocks, which keeps long memory sums accurate without paying
    // for compensation on every term.
    constexpr long block = 2048;
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<double> comp(static_cast<std::size_t>(n), 0.0);
    std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
    const long first = m + 1 - kmax;
    long in_block = 0;
    for (long i = first; i <= m; ++i) {
        const double wk = w[m - i];
        const double* lap = h.laplacian(i);
        for (long j = 0; j < n; ++j) {
            partial[static_cast<std::size_t>(j)] += wk * lap[j];
        }
        if (++in_block == block) {
            for (long j = 0; j < n; ++j) {
                compensated_add(acc[static_cast<std::size_t>(j)],
                                comp[static_cast<std::size_t>(j)],
                                partial[static_cast<std::size_t>(j)]);
                partial[static_cast<std::size_t>(j)] = 0.0;
            }
            in_block = 0;
        }
    }
    if (in_block > 0) {
        for (long j = 0; j < n; ++j) {
            compensated_add(acc[static_cast<std::size_t>(j)],
                            comp[static_cast<std::size_t>(j)],
                            partial[static_cast<std::size_t>(j)]);
        }
    }

    std::vector<double> next(h.row_width(), 0.0);
    const double* cur = h.snapshot(m);
    for (long j = 0; j < n; ++j) {
        next[static_cast<std::size_t>(j) + 1] =
            cur[j + 1] + S * (acc[static_cast<std::size_t>(j)] +
                              comp[static_cast<std::size_t>(j)]);
    }
    h.push(next);
}

// Initial-value problem: a mesh plus a full-width initial row.
struct problem {
    grid1d grid;
    std::vector<double> ic;  // width n_interior + 2, boundaries zero
};

// Discrete point mass of unit total weight at the interior node nearest x0.
inline problem delta_ic(const grid1d& g, double x0) {
    g.validate();
    problem pr{g, std::vector<double>(static_cast<std::size_t>(g.n_interior) + 2, 0.0)};
    const double dx = g.dx();
    long j = std::lround((x0 - g.xmin) / dx);
    j = std::clamp<long>(j, 1, g.n_interior);
    pr.ic[static_cast<std::size_t>(j)] = 1.0 / dx;
    return pr;
}

// Point mass spread over three nodes with weights 1/4, 1/2, 1/4.  Feeds both
// parities of the mesh, which a single-node mass cannot do when the weight
// list has no memory tail.
inline problem delta_smoothed_ic(const grid1d& g, double x0) {
    g.validate();
    problem pr{g, std::vector<double>(static_cast<std::size_t>(g.n_interior) + 2, 0.0)};
    const double dx = g.dx();
    const long j = std::clamp<long>(std::lround((x0 - g.xmin) / dx), 1, g.n_interior);
    for (long o = -1; o <= 1; ++o) {
        const long i = j + o;
        if (i >= 1 && i <= g.n_interior) {
            pr.ic[static_cast<std::size_t>(i)] += (o == 0 ? 0.5 : 0.25) / dx;
        }
    }
    return pr;
}

// Concave arch (x - xmin)(xmax - x); on the unit interval this is x(1 - x).
inline problem parabola_ic(const grid1d& g) {
    g.validate();
    problem pr{g, std::vector<double>(static_cast<std::size_t>(g.n_interior) + 2, 0.0)};
    for (long j = 1; j <= g.n_interior; ++j) {
        const double xj = g.x(j);
        pr.ic[static_cast<std::size_t>(j)] = (xj - g.xmin) * (g.xmax - xj);
    }
    return pr;
}

// Single sine mode of the zero-boundary interval.
inline problem mode_ic(const grid1d& g, int n_mode) {
    g.validate();
    if (n_mode < 1) {
        throw domain_error("mode index must be positive");
    }
    problem pr{g, std::vector<double>(static_cast<std::size_t>(g.n_interior) + 2, 0.0)};
    const double len = g.xmax - g.xmin;
    for (long j = 1; j <= g.n_interior; ++j) {
        pr.ic[static_cast<std::size_t>(j)] =
            std::sin(static_cast<double>(n_mode) * M_PI * (g.x(j) - g.xmin) / len);
    }
    return pr;
}

// Caller-supplied interior values (boundaries forced to zero).
inline problem tabulated_ic(const grid1d& g, const std::vector<double>& interior) {
    g.validate();
    if (static_cast<long>(interior.size()) != g.n_interior) {
        throw domain_error("tabulated values must cover exactly the interior nodes");
    }
    problem pr{g, std::vector<double>(static_cast<std::size_t>(g.n_interior) + 2, 0.0)};
    std::copy(interior.begin(), interior.end(), pr.ic.begin() + 1);
    return pr;
}

// Unit interval with an odd interior count 2N-1 and the parabolic arch.
inline problem make_absorbing_problem(long N) {
    if (N < 1) {
        throw domain_error("absorbing problem requires N >= 1");
    }
    return parabola_ic(grid1d{0.0, 1.0, 2 * N - 1});
}

// Unit interval meshed at spacing dx (which must divide the interval).
inline problem make_absorbing_problem_dx(double dx) {
    if (!(dx > 0.0) || dx >= 0.5) {
        throw domain_error("absorbing problem requires 0 < dx < 1/2");
    }
    const double cells = 1.0 / dx;
    const long nc = std::lround(cells);
    if (std::fabs(cells - static_cast<double>(nc)) > 1e-9 * cells || nc < 2) {
        throw domain_error("dx must divide the unit interval");
    }
    return parabola_ic(grid1d{0.0, 1.0, nc - 1});
}

// Free-space mock-up: a point mass centered on [-half_width, half_width]
// where the mesh spacing realizes the requested diffusion number S at the
// given dt.  half_nodes counts mesh cells between the center and either
// boundary, so the interior holds 2*half_nodes - 1 nodes.
inline problem make_propagator_problem(double gamma, double S, double dt, double K,
                                       long half_nodes, bool smoothed = false) {
    if (!(S > 0.0) || !(dt > 0.0) || !(gamma > 0.0) || gamma > 1.0 || !(K > 0.0)) {
        throw domain_error("propagator problem requires positive S, dt, K and gamma in (0, 1]");
    }
    if (half_nodes < 2) {
        throw domain_error("propagator problem requires half_nodes >= 2");
    }
    const double dx = std::sqrt(K * std::pow(dt, gamma) / S);
    const double half_width = static_cast<double>(half_nodes) * dx;
    grid1d g{-half_width, half_width, 2 * half_nodes - 1};
    return smoothed ? delta_smoothed_ic(g, 0.0) : delta_ic(g, 0.0);
}

// Per-step record of the run.
struct step_log {
    std::vector<double> max_abs;  // max |U| per stored row, initial row included
    bool overflow = false;        // a step produced a non-finite value
    long overflow_step = -1;      // index of the offending step, -1 if none
    double dropped_tail = 0.0;    // bound on the convolution mass short memory dropped
};

struct trajectory {
    grid1d grid;
    scheme_params params;
    long steps = 0;                      // rows successfully computed past the initial one
    bool unstable = false;               // overflow detected before finishing
    field_history history;               // every computed row
    std::vector<double> snapshot_times;  // realized (snapped) times
    std::vector<long> snapshot_steps;    // step index of each stored snapshot
    std::vector<std::vector<double>> snapshots;  // full-width rows at those steps
    step_log log;

    explicit trajectory(long n_interior) : history(n_interior) {}
};

namespace detail {

inline double row_max_abs(const double* row, std::size_t width) {
    double r = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
        r = std::max(r, std::fabs(row[j]));
    }
    return r;
}

inline bool row_finite(const double* row, std::size_t width) {
    for (std::size_t j = 0; j < width; ++j) {
        if (!std::isfinite(row[j])) {
            return false;
        }
    }
    return true;
}

}  // namespace detail

// Runs exactly n_steps steps (fewer if the field overflows) and stores
// snapshots at the requested step indices.  Snapshot requests outside
// [0, n_steps] are clamped.
inline trajectory solve_steps(const problem& pr, const scheme_params& p, long n_steps,
                              std::vector<long> snapshot_steps = {}) {
    p.validate();
    pr.grid.validate();
    if (pr.ic.size() != static_cast<std::size_t>(pr.grid.n_interior) + 2) {
        throw domain_error("initial row width does not match the grid");
    }
    if (n_steps < 0) {
        throw domain_error("step count must be non-negative");
    }

    trajectory tr(pr.grid.n_interior);
    tr.grid = pr.grid;
    tr.params = p;

    const double alpha = 1.0 - p.gamma;
    const auto w = coefficients(alpha, n_steps, p.coeff_order);
    const auto tail = detail::abs_tail_sums(w);

    tr.history.push(pr.ic);
    tr.log.max_abs.push_back(detail::row_max_abs(pr.ic.data(), tr.history.row_width()));

    for (auto& s : snapshot_steps) {
        s = std::clamp<long>(s, 0, n_steps);
    }
    std::sort(snapshot_steps.begin(), snapshot_steps.end());
    snapshot_steps.erase(std::unique(snapshot_steps.begin(), snapshot_steps.end()),
                         snapshot_steps.end());
    std::size_t next_snap = 0;
    auto take_snapshots = [&](long step_idx) {
        while (next_snap < snapshot_steps.size() && snapshot_steps[next_snap] == step_idx) {
            tr.snapshot_steps.push_back(step_idx);
            tr.snapshot_times.push_back(static_cast<double>(step_idx) * p.dt);
            tr.snapshots.push_back(tr.history.snapshot_copy(step_idx));
            ++next_snap;
        }
    };
    take_snapshots(0);

    double lap_peak = 0.0;
    for (long m = 0; m < n_steps; ++m) {
        lap_peak = std::max(lap_peak, tr.history.lap_max(m));
        step(tr.history, p, w);
        const long done = tr.history.rows() - 1;
        const double* row = tr.history.snapshot(done);
        if (!detail::row_finite(row, tr.history.row_width())) {
            tr.unstable = true;
            tr.log.overflow = true;
            tr.log.overflow_step = done;
            tr.steps = done;
            tr.log.max_abs.push_back(std::numeric_limits<double>::infinity());
            return tr;
        }
        tr.log.max_abs.push_back(detail::row_max_abs(row, tr.history.row_width()));
        if (p.short_memory > 0 && m + 1 > p.short_memory) {
            // conservative bound: dropped rows are older than the window and
            // none of their Laplacians exceeds the running peak
            const std::size_t k = static_cast<std::size_t>(
                std::min<long>(p.short_memory, static_cast<long>(w.size())));
            const double tail_mass = tail[k] - tail[std::min<std::size_t>(
                                                   static_cast<std::size_t>(m) + 1, tail.size() - 1)];
            tr.log.dropped_tail += std::max(0.0, tail_mass) * lap_peak;
        }
        tr.steps = done;
        take_snapshots(done);
    }
    return tr;
}

// Runs to t_final (ceil(t_final / dt) steps) and stores snapshots at the
// steps nearest the requested times.
inline trajectory solve(const problem& pr, const scheme_params& p, double t_final,
                        const std::vector<double>& snapshot_times = {}) {
    p.validate();
    if (!(t_final >= 0.0)) {
        throw domain_error("t_final must be non-negative");
    }
    const long n_steps = static_cast<long>(std::ceil(t_final / p.dt - 1e-12));
    std::vector<long> snaps;
    snaps.reserve(snapshot_times.size());
    for (double t : snapshot_times) {
        snaps.push_back(std::lround(t / p.dt));
    }
    return solve_steps(pr, p, std::max<long>(n_steps, 0), std::move(snaps));
}

}  // namespace fracdiff

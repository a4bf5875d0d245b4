#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracdiff/kahan.hpp"
#include "fracdiff/solver.hpp"
#include "oracle_utils.hpp"

using namespace fracdiff;

namespace {

std::vector<double> interior_of(const std::vector<double>& row) {
    return std::vector<double>(row.begin() + 1, row.end() - 1);
}

double mass_of(const trajectory& tr, long step_idx) {
    kahan_sum s;
    const double* row = tr.history.snapshot(step_idx);
    for (long j = 1; j <= tr.grid.n_interior; ++j) {
        s.add(row[j]);
    }
    return s.value() * tr.grid.dx();
}

}  // namespace

TEST_CASE("dt_from_S: closed forms and round trip") {
    // quadratic case: gamma = 1/2 squares the product
    REQUIRE_THAT(dt_from_S(0.33, 0.1, 0.5, 1.0),
                 Catch::Matchers::WithinRel(0.0033 * 0.0033, 1e-15));
    // classical case: dt = S dx^2 / K
    REQUIRE(dt_from_S(0.4, 0.05, 1.0, 1.0) == 0.4 * 0.05 * 0.05);
    for (double g : {0.3, 0.65, 1.0}) {
        scheme_params p;
        p.gamma = g;
        p.K = 1.7;
        p.dx = 0.02;
        p.dt = dt_from_S(0.37, p.dx, g, p.K);
        REQUIRE_THAT(p.S(), Catch::Matchers::WithinRel(0.37, 1e-12));
    }
    REQUIRE_THROWS_AS(dt_from_S(0.0, 0.1, 0.5, 1.0), domain_error);
    REQUIRE_THROWS_AS(dt_from_S(0.4, -0.1, 0.5, 1.0), domain_error);
}

TEST_CASE("scheme_params: derived S and validation") {
    scheme_params p;
    p.gamma = 0.5;
    p.K = 2.0;
    p.dx = 0.1;
    p.dt = 1e-4;
    REQUIRE_THAT(p.S(), Catch::Matchers::WithinRel(2.0, 1e-14));
    REQUIRE_NOTHROW(p.validate());

    auto bad = p;
    bad.gamma = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), domain_error);
    bad = p;
    bad.gamma = 1.5;
    REQUIRE_THROWS_AS(bad.validate(), domain_error);
    bad = p;
    bad.dt = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), domain_error);
    bad = p;
    bad.coeff_order = 3;
    REQUIRE_THROWS_AS(bad.validate(), domain_error);
    bad = p;
    bad.short_memory = 1;
    REQUIRE_THROWS_AS(bad.validate(), domain_error);
}

TEST_CASE("two fractional steps from a point mass reproduce the hand-worked field") {
    // gamma = 1/2, S = 1/4, unit mass at the center of five interior nodes;
    // every quantity is a dyadic rational so the comparison is exact
    grid1d g{0.0, 6.0, 5};
    auto pr = tabulated_ic(g, {0.0, 0.0, 1.0, 0.0, 0.0});
    scheme_params p;
    p.gamma = 0.5;
    p.dx = 1.0;
    p.dt = 0.0625;  // dt^(1/2) = 1/4 exactly
    REQUIRE(p.S() == 0.25);

    auto tr = solve_steps(pr, p, 2);
    REQUIRE(tr.steps == 2);
    REQUIRE(interior_of(tr.history.snapshot_copy(1)) ==
            std::vector<double>{0.0, 0.25, 0.5, 0.25, 0.0});
    REQUIRE(interior_of(tr.history.snapshot_copy(2)) ==
            std::vector<double>{0.0625, 0.125, 0.625, 0.125, 0.0625});
}

TEST_CASE("zero field is a fixed point") {
    grid1d g{0.0, 1.0, 7};
    auto pr = tabulated_ic(g, std::vector<double>(7, 0.0));
    scheme_params p;
    p.gamma = 0.6;
    p.dx = g.dx();
    p.dt = 1e-3;
    auto tr = solve_steps(pr, p, 25);
    for (long i = 0; i <= tr.steps; ++i) {
        for (std::size_t j = 0; j < tr.history.row_width(); ++j) {
            REQUIRE(tr.history.snapshot(i)[j] == 0.0);
        }
    }
}

TEST_CASE("mass is conserved until the support reaches the boundary") {
    grid1d g{0.0, 1.0, 41};
    auto pr = delta_ic(g, 0.5);
    scheme_params p;
    p.gamma = 0.6;
    p.dx = g.dx();
    p.dt = dt_from_S(0.3, p.dx, p.gamma, p.K);
    auto tr = solve_steps(pr, p, 12);  // support radius 12 nodes < 20
    const double m0 = mass_of(tr, 0);
    REQUIRE_THAT(m0, Catch::Matchers::WithinRel(1.0, 1e-12));
    for (long i = 1; i <= tr.steps; ++i) {
        REQUIRE_THAT(mass_of(tr, i), Catch::Matchers::WithinRel(m0, 1e-12));
    }
}

TEST_CASE("classical limit damps a sine mode by the exact per-step factor") {
    grid1d g{0.0, 1.0, 9};
    auto pr = mode_ic(g, 1);
    scheme_params p;
    p.gamma = 1.0;
    p.dx = g.dx();
    p.dt = 0.4 * p.dx * p.dx;
    const double s = std::sin(M_PI * p.dx / 2.0);
    const double factor = 1.0 - 4.0 * 0.4 * s * s;

    auto tr = solve_steps(pr, p, 50);
    double expected = std::pow(factor, 50.0);
    for (long j = 1; j <= g.n_interior; ++j) {
        REQUIRE_THAT(tr.history.snapshot(50)[j],
                     Catch::Matchers::WithinRel(expected * pr.ic[static_cast<std::size_t>(j)],
                                                1e-12));
    }
}

TEST_CASE("gamma = 1 stepping is bit-identical to a directly coded classical scheme") {
    grid1d g{0.0, 1.0, 33};
    std::vector<double> interior(33);
    for (int j = 0; j < 33; ++j) {
        const double x = g.x(j + 1);
        interior[static_cast<std::size_t>(j)] = x * (1.0 - x) + 0.2 * std::sin(3.0 * M_PI * x);
    }
    auto pr = tabulated_ic(g, interior);
    scheme_params p;
    p.gamma = 1.0;
    p.dx = g.dx();
    p.dt = 0.4 * p.dx * p.dx;

    auto tr = solve_steps(pr, p, 60);
    auto ref = testoracle::classical_ftcs(0.4, interior, 60);
    REQUIRE(tr.steps == 60);
    for (long i = 0; i <= 60; ++i) {
        REQUIRE(tr.history.snapshot_copy(i) == ref[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("solution map is linear in the initial data") {
    grid1d g{0.0, 1.0, 15};
    std::vector<double> a(15), b(15), mix(15);
    for (int j = 0; j < 15; ++j) {
        const double x = g.x(j + 1);
        a[static_cast<std::size_t>(j)] = std::sin(M_PI * x);
        b[static_cast<std::size_t>(j)] = x * x * (1.0 - x);
        mix[static_cast<std::size_t>(j)] = 0.7 * a[static_cast<std::size_t>(j)] -
                                           1.3 * b[static_cast<std::size_t>(j)];
    }
    scheme_params p;
    p.gamma = 0.7;
    p.dx = g.dx();
    p.dt = dt_from_S(0.25, p.dx, p.gamma, p.K);

    auto ta = solve_steps(tabulated_ic(g, a), p, 30);
    auto tb = solve_steps(tabulated_ic(g, b), p, 30);
    auto tm = solve_steps(tabulated_ic(g, mix), p, 30);
    for (long j = 1; j <= 15; ++j) {
        const double combined = 0.7 * ta.history.snapshot(30)[j] -
                                1.3 * tb.history.snapshot(30)[j];
        REQUIRE_THAT(tm.history.snapshot(30)[j],
                     Catch::Matchers::WithinAbs(combined, 1e-13));
    }

    // scaling by a power of two commutes with every floating operation
    std::vector<double> a4(15);
    for (int j = 0; j < 15; ++j) {
        a4[static_cast<std::size_t>(j)] = 4.0 * a[static_cast<std::size_t>(j)];
    }
    auto ta4 = solve_steps(tabulated_ic(g, a4), p, 30);
    for (long j = 1; j <= 15; ++j) {
        REQUIRE(ta4.history.snapshot(30)[j] == 4.0 * ta.history.snapshot(30)[j]);
    }
}

TEST_CASE("stored Laplacians equal their recomputation from the snapshots") {
    grid1d g{0.0, 1.0, 11};
    auto pr = parabola_ic(g);
    scheme_params p;
    p.gamma = 0.8;
    p.dx = g.dx();
    p.dt = dt_from_S(0.2, p.dx, p.gamma, p.K);
    auto tr = solve_steps(pr, p, 20);
    for (long i = 0; i <= tr.steps; ++i) {
        const double* u = tr.history.snapshot(i);
        const double* lap = tr.history.laplacian(i);
        for (long j = 0; j < g.n_interior; ++j) {
            REQUIRE(lap[j] == u[j] - 2.0 * u[j + 1] + u[j + 2]);
        }
    }
}

TEST_CASE("short memory: a window covering the whole run changes nothing") {
    grid1d g{0.0, 1.0, 9};
    auto pr = delta_ic(g, 0.5);
    scheme_params p;
    p.gamma = 0.5;
    p.dx = g.dx();
    p.dt = dt_from_S(0.2, p.dx, p.gamma, p.K);

    auto full = solve_steps(pr, p, 40);
    auto windowed_p = p;
    windowed_p.short_memory = 64;
    auto windowed = solve_steps(pr, windowed_p, 40);
    REQUIRE(windowed.log.dropped_tail == 0.0);
    for (long i = 0; i <= 40; ++i) {
        REQUIRE(full.history.snapshot_copy(i) == windowed.history.snapshot_copy(i));
    }
}

TEST_CASE("short memory: a truncating window perturbs the run and logs a bound") {
    grid1d g{0.0, 1.0, 9};
    auto pr = delta_ic(g, 0.5);
    scheme_params p;
    p.gamma = 0.5;
    p.dx = g.dx();
    p.dt = dt_from_S(0.2, p.dx, p.gamma, p.K);

    auto full = solve_steps(pr, p, 60);
    auto diff_for = [&](long window) {
        auto q = p;
        q.short_memory = window;
        auto t = solve_steps(pr, q, 60);
        REQUIRE(t.log.dropped_tail > 0.0);
        double diff = 0.0;
        for (long j = 1; j <= 9; ++j) {
            diff = std::max(diff, std::fabs(t.history.snapshot(60)[j] -
                                            full.history.snapshot(60)[j]));
        }
        return std::pair{diff, t.log.dropped_tail};
    };
    const auto [d8, b8] = diff_for(8);
    const auto [d32, b32] = diff_for(32);
    REQUIRE(d8 > 0.0);
    // widening the window must move the run toward the full-memory one and
    // shrink the logged bound on what was dropped
    REQUIRE(d32 < 0.5 * d8);
    REQUIRE(b32 < 0.5 * b8);
}

TEST_CASE("zero final time runs no steps and keeps the initial row") {
    grid1d g{0.0, 1.0, 5};
    auto pr = parabola_ic(g);
    scheme_params p;
    p.gamma = 0.9;
    p.dx = g.dx();
    p.dt = 1e-3;
    auto tr = solve(pr, p, 0.0, {0.0});
    REQUIRE(tr.steps == 0);
    REQUIRE(tr.history.rows() == 1);
    REQUIRE(tr.snapshots.size() == 1);
    REQUIRE(tr.snapshot_steps == std::vector<long>{0});
    REQUIRE(tr.snapshots[0] == pr.ic);
}

TEST_CASE("a single interior node decays geometrically in the classical limit") {
    grid1d g{0.0, 1.0, 1};
    auto pr = delta_ic(g, 0.5);  // node value 1/dx = 2
    scheme_params p;
    p.gamma = 1.0;
    p.dx = g.dx();
    p.dt = 0.25 * p.dx * p.dx;
    REQUIRE(pr.ic == std::vector<double>{0.0, 2.0, 0.0});
    auto tr = solve_steps(pr, p, 3);
    // U' = U + S(-2U) = U/2 per step, exactly
    REQUIRE(tr.history.snapshot(3)[1] == 0.25);
}

TEST_CASE("overflow truncates the run and flags instability") {
    grid1d g{0.0, 1.0, 9};
    auto pr = delta_ic(g, 0.5);
    scheme_params p;
    p.gamma = 1.0;
    p.dx = g.dx();
    p.dt = 5.0 * p.dx * p.dx;  // S = 5, far beyond the classical limit
    auto tr = solve_steps(pr, p, 400);
    REQUIRE(tr.unstable);
    REQUIRE(tr.log.overflow);
    REQUIRE(tr.steps < 400);
    REQUIRE(tr.log.overflow_step == tr.steps);
    REQUIRE(std::isinf(tr.log.max_abs.back()));
}

TEST_CASE("snapshot times snap to the nearest step") {
    grid1d g{0.0, 1.0, 5};
    auto pr = parabola_ic(g);
    scheme_params p;
    p.gamma = 1.0;
    p.dx = g.dx();
    p.dt = 0.004;
    auto tr = solve(pr, p, 0.02, {0.0101, 0.02, 99.0});
    REQUIRE(tr.snapshot_steps == std::vector<long>{3, 5});  // 99.0 clamps onto step 5 too
    REQUIRE_THAT(tr.snapshot_times[0], Catch::Matchers::WithinRel(0.012, 1e-12));
    REQUIRE_THAT(tr.snapshot_times[1], Catch::Matchers::WithinRel(0.02, 1e-12));
}

TEST_CASE("step preconditions") {
    field_history empty(3);
    scheme_params p;
    p.gamma = 0.5;
    p.dx = 0.25;
    p.dt = 1e-3;
    auto w = coefficients(0.5, 10, 1);
    REQUIRE_THROWS_AS(step(empty, p, w), domain_error);

    field_history h(3);
    h.push(std::vector<double>{0.0, 0.0, 1.0, 0.0, 0.0});
    auto w1 = coefficients(0.5, 0, 1);  // single weight: enough for one step only
    REQUIRE_NOTHROW(step(h, p, w1));
    REQUIRE_THROWS_AS(step(h, p, w1), std::out_of_range);
}

TEST_CASE("solve input validation") {
    grid1d g{0.0, 1.0, 5};
    auto pr = parabola_ic(g);
    scheme_params p;
    p.gamma = 0.5;
    p.dx = g.dx();
    p.dt = 1e-3;

    auto bad = pr;
    bad.ic.pop_back();
    REQUIRE_THROWS_AS(solve_steps(bad, p, 5), domain_error);
    REQUIRE_THROWS_AS(solve_steps(pr, p, -1), domain_error);
    REQUIRE_THROWS_AS(solve(pr, p, -0.5), domain_error);

    grid1d gbad{1.0, 0.0, 5};
    REQUIRE_THROWS_AS(parabola_ic(gbad), domain_error);
    REQUIRE_THROWS_AS(tabulated_ic(g, std::vector<double>(4, 0.0)), domain_error);
}

TEST_CASE("initial-data builders") {
    grid1d g{0.0, 1.0, 9};
    const double dx = g.dx();

    auto d = delta_ic(g, 0.52);
    REQUIRE_THAT(d.ic[5], Catch::Matchers::WithinRel(1.0 / dx, 1e-15));
    double total = 0.0;
    for (double v : d.ic) total += v;
    REQUIRE_THAT(total * dx, Catch::Matchers::WithinRel(1.0, 1e-14));

    auto edge = delta_ic(g, -3.0);  // clamps into the interior
    REQUIRE(edge.ic[1] > 0.0);
    REQUIRE(edge.ic.front() == 0.0);

    auto ds = delta_smoothed_ic(g, 0.5);
    REQUIRE_THAT(ds.ic[5], Catch::Matchers::WithinRel(0.5 / dx, 1e-15));
    REQUIRE_THAT(ds.ic[4], Catch::Matchers::WithinRel(0.25 / dx, 1e-15));
    REQUIRE_THAT(ds.ic[6], Catch::Matchers::WithinRel(0.25 / dx, 1e-15));
    total = 0.0;
    for (double v : ds.ic) total += v;
    REQUIRE_THAT(total * dx, Catch::Matchers::WithinRel(1.0, 1e-14));

    auto par = parabola_ic(g);
    for (long j = 0; j <= 10; ++j) {
        REQUIRE_THAT(par.ic[static_cast<std::size_t>(j)],
                     Catch::Matchers::WithinAbs(g.x(j) * (1.0 - g.x(j)), 1e-15));
    }

    auto m2 = mode_ic(g, 2);
    REQUIRE_THAT(m2.ic[1], Catch::Matchers::WithinRel(std::sin(0.2 * M_PI), 1e-14));
    REQUIRE_THROWS_AS(mode_ic(g, 0), domain_error);

    auto ab = make_absorbing_problem(5);
    REQUIRE(ab.grid.n_interior == 9);
    REQUIRE_THAT(ab.grid.dx(), Catch::Matchers::WithinRel(0.1, 1e-15));

    auto abdx = make_absorbing_problem_dx(1.0 / 20.0);
    REQUIRE(abdx.grid.n_interior == 19);
    REQUIRE_THROWS_AS(make_absorbing_problem_dx(0.3), domain_error);

    auto prop = make_propagator_problem(0.5, 0.2, 1e-3, 1.0, 50);
    const double pdx = std::sqrt(std::pow(1e-3, 0.5) / 0.2);
    REQUIRE(prop.grid.n_interior == 99);
    REQUIRE_THAT(prop.grid.dx(), Catch::Matchers::WithinRel(pdx, 1e-12));
    REQUIRE_THAT(prop.grid.xmax, Catch::Matchers::WithinRel(50.0 * pdx, 1e-12));
    REQUIRE_THAT(prop.ic[50], Catch::Matchers::WithinRel(1.0 / pdx, 1e-12));
}

#pragma once

// Configuration parsing and artifact writing for the command-line tool.
//
// Each command takes a flat JSON object (from a config file, command-line
// flags, or both merged), validates it against an explicit key allowlist,
// runs the computation, and writes a CSV artifact plus a
// "<output>.manifest.json" sidecar that echoes the configuration, every
// derived quantity, and the artifact paths.  CSV bytes are deterministic;
// the timestamp lives only in the manifest.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fracdiff/analysis.hpp"
#include "fracdiff/csv.hpp"
#include "fracdiff/errors.hpp"
#include "fracdiff/gl_coeffs.hpp"
#include "fracdiff/solver.hpp"
#include "fracdiff/specfun.hpp"
#include "fracdiff/stability.hpp"

namespace fracdiff {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON access helpers: every failure is a parse_error naming the bad key.
// ---------------------------------------------------------------------------

namespace cfg {

inline void require_object(const json& j) {
    if (!j.is_object()) {
        throw parse_error("configuration must be a JSON object");
    }
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) {
            if (it.key() == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw parse_error(it.key(), "unknown key");
        }
    }
}

inline double number(const json& j, const std::string& key,
                     std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw parse_error(key, "required value is missing");
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        throw parse_error(key, "expected a number");
    }
    return v.get<double>();
}

inline long long integer(const json& j, const std::string& key,
                         std::optional<long long> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw parse_error(key, "required value is missing");
    }
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
        throw parse_error(key, "expected an integer");
    }
    return v.get<long long>();
}

inline std::string text(const json& j, const std::string& key,
                        std::optional<std::string> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw parse_error(key, "required value is missing");
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
        throw parse_error(key, "expected a string");
    }
    return v.get<std::string>();
}

inline std::vector<double> number_list(const json& j, const std::string& key) {
    if (!j.contains(key)) {
        throw parse_error(key, "required value is missing");
    }
    const json& v = j.at(key);
    if (!v.is_array() || v.empty()) {
        throw parse_error(key, "expected a non-empty array of numbers");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) {
            throw parse_error(key, "expected a non-empty array of numbers");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

inline double memory_exponent(const json& j) {
    const double gamma = number(j, "gamma");
    if (!(gamma > 0.0) || !(gamma <= 1.0)) {
        throw parse_error("gamma", "must lie in (0, 1]");
    }
    return gamma;
}

inline int coeff_order(const json& j) {
    const long long order = integer(j, "coeff-order", 1);
    if (order != 1 && order != 2) {
        throw parse_error("coeff-order", "must be 1 or 2");
    }
    return static_cast<int>(order);
}

inline double positive_number(const json& j, const std::string& key,
                              std::optional<double> fallback = std::nullopt) {
    const double v = number(j, key, fallback);
    if (!(v > 0.0)) {
        throw parse_error(key, "must be positive");
    }
    return v;
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// Shared manifest plumbing.
// ---------------------------------------------------------------------------

inline std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline void write_manifest(const std::string& output_path, const std::string& command,
                           const json& config, const json& derived,
                           const std::vector<std::string>& artifacts) {
    json m;
    m["command"] = command;
    m["timestamp"] = iso_utc_now();
    m["config"] = config;
    m["derived"] = derived;
    m["artifacts"] = artifacts;
    const std::string path = output_path + ".manifest.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw domain_error("cannot open '" + path + "' for writing");
    }
    f << m.dump(2) << '\n';
    if (!f) {
        throw domain_error("write to '" + path + "' failed");
    }
}

// ---------------------------------------------------------------------------
// solve: run the time stepper and write snapshots in long format (t,x,u).
// ---------------------------------------------------------------------------

struct solve_config {
    double gamma = 1.0;
    double K = 1.0;
    int coeff_order = 1;
    long long short_memory = 0;
    bool have_dt = false;
    double dt = 0.0;
    bool have_S = false;
    double S = 0.0;
    double t_final = 0.0;
    std::vector<double> snapshot_times;
    double xmin = 0.0;
    double xmax = 1.0;
    long long n_interior = 0;
    std::string ic = "delta";
    bool have_ic_x0 = false;
    double ic_x0 = 0.0;
    long long ic_mode_n = 1;
    std::string ic_file;
    std::string output;
};

inline solve_config parse_solve_config(const json& j) {
    cfg::require_object(j);
    cfg::reject_unknown_keys(j, {"gamma", "K", "coeff-order", "short-memory", "dt", "S",
                                 "t-final", "snapshot-times", "xmin", "xmax", "dx",
                                 "n-interior", "ic", "ic-x0", "ic-mode-n", "ic-file",
                                 "output"});
    solve_config c;
    c.gamma = cfg::memory_exponent(j);
    c.K = cfg::positive_number(j, "K", 1.0);
    c.coeff_order = cfg::coeff_order(j);
    c.short_memory = cfg::integer(j, "short-memory", 0);
    if (c.short_memory != 0 && c.short_memory < 2) {
        throw parse_error("short-memory", "must be 0 (full memory) or at least 2");
    }

    c.have_dt = j.contains("dt");
    c.have_S = j.contains("S");
    if (c.have_dt == c.have_S) {
        throw parse_error("dt", "give exactly one of 'dt' or 'S'");
    }
    if (c.have_dt) {
        c.dt = cfg::positive_number(j, "dt");
    } else {
        c.S = cfg::positive_number(j, "S");
    }

    c.t_final = cfg::number(j, "t-final");
    if (!(c.t_final >= 0.0)) {
        throw parse_error("t-final", "must be non-negative");
    }
    if (j.contains("snapshot-times")) {
        c.snapshot_times = cfg::number_list(j, "snapshot-times");
    } else {
        c.snapshot_times = {c.t_final};
    }

    c.xmin = cfg::number(j, "xmin", 0.0);
    c.xmax = cfg::number(j, "xmax", 1.0);
    if (!(c.xmax > c.xmin)) {
        throw parse_error("xmax", "must exceed 'xmin'");
    }
    const bool have_dx = j.contains("dx");
    const bool have_n = j.contains("n-interior");
    if (have_dx == have_n) {
        throw parse_error("dx", "give exactly one of 'dx' or 'n-interior'");
    }
    if (have_dx) {
        const double dx = cfg::positive_number(j, "dx");
        const double cells = (c.xmax - c.xmin) / dx;
        const double rounded = std::round(cells);
        if (rounded < 2.0 || std::abs(cells - rounded) > 1e-9 * rounded) {
            throw parse_error("dx", "must divide the domain into at least two cells");
        }
        c.n_interior = static_cast<long long>(rounded) - 1;
    } else {
        c.n_interior = cfg::integer(j, "n-interior");
        if (c.n_interior < 1) {
            throw parse_error("n-interior", "must be at least 1");
        }
    }

    c.ic = cfg::text(j, "ic", std::string("delta"));
    if (c.ic != "delta" && c.ic != "delta-smoothed" && c.ic != "parabola" &&
        c.ic != "mode" && c.ic != "tabulated") {
        throw parse_error("ic", "expected one of delta, delta-smoothed, parabola, mode, "
                                "tabulated");
    }
    c.have_ic_x0 = j.contains("ic-x0");
    if (c.have_ic_x0) {
        c.ic_x0 = cfg::number(j, "ic-x0");
    }
    c.ic_mode_n = cfg::integer(j, "ic-mode-n", 1);
    if (c.ic_mode_n < 1) {
        throw parse_error("ic-mode-n", "must be at least 1");
    }
    if (c.ic == "tabulated") {
        c.ic_file = cfg::text(j, "ic-file");
    } else if (j.contains("ic-file")) {
        throw parse_error("ic-file", "only valid with ic = tabulated");
    }

    c.output = cfg::text(j, "output");
    if (c.output.empty()) {
        throw parse_error("output", "must be a non-empty path");
    }
    return c;
}

inline problem build_initial_condition(const solve_config& c, const grid1d& g) {
    if (c.ic == "delta" || c.ic == "delta-smoothed") {
        const double x0 = c.have_ic_x0 ? c.ic_x0 : 0.5 * (g.xmin + g.xmax);
        return c.ic == "delta" ? delta_ic(g, x0) : delta_smoothed_ic(g, x0);
    }
    if (c.ic == "parabola") {
        return parabola_ic(g);
    }
    if (c.ic == "mode") {
        return mode_ic(g, static_cast<int>(c.ic_mode_n));
    }
    const csv_table t = read_csv_file(c.ic_file);
    long u_col = -1;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == "u") {
            u_col = static_cast<long>(i);
        }
    }
    if (u_col < 0) {
        throw parse_error("ic-file", "needs a column named 'u'");
    }
    if (t.rows.size() != static_cast<std::size_t>(g.n_interior)) {
        throw parse_error("ic-file", "row count does not match the interior node count");
    }
    std::vector<double> interior;
    interior.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        interior.push_back(row[static_cast<std::size_t>(u_col)]);
    }
    return tabulated_ic(g, interior);
}

struct solve_outcome {
    bool unstable = false;
    long steps = 0;
};

inline solve_outcome run_solve(const json& j, std::ostream& warn) {
    const solve_config c = parse_solve_config(j);

    grid1d g{c.xmin, c.xmax, static_cast<long>(c.n_interior)};
    scheme_params p;
    p.gamma = c.gamma;
    p.K = c.K;
    p.dx = g.dx();
    p.coeff_order = c.coeff_order;
    p.short_memory = static_cast<long>(c.short_memory);
    p.dt = c.have_dt ? c.dt : dt_from_S(c.S, p.dx, c.gamma, c.K);

    const problem pr = build_initial_condition(c, g);
    const trajectory tr = solve(pr, p, c.t_final, c.snapshot_times);

    const long n_steps = tr.steps + (tr.unstable ? 1 : 0);
    json snaps = json::array();
    for (double t_req : c.snapshot_times) {
        const long step = std::clamp<long>(std::lround(t_req / p.dt), 0,
                                           static_cast<long>(std::ceil(c.t_final / p.dt - 1e-12)));
        const double realized = static_cast<double>(step) * p.dt;
        if (std::abs(realized - t_req) > 1e-9 * std::max(1.0, std::abs(t_req))) {
            warn << "warning: snapshot time " << format_double(t_req)
                 << " snapped to " << format_double(realized) << '\n';
        }
        snaps.push_back({{"requested", t_req}, {"step", step}, {"realized", realized}});
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        const double t = tr.snapshot_times[k];
        for (long i = 0; i < static_cast<long>(tr.snapshots[k].size()); ++i) {
            rows.push_back({t, g.x(i), tr.snapshots[k][i]});
        }
    }
    write_csv_file(c.output, {"t", "x", "u"}, rows);

    json derived;
    derived["gamma"] = c.gamma;
    derived["K"] = c.K;
    derived["coeff-order"] = c.coeff_order;
    derived["short-memory"] = c.short_memory;
    derived["dx"] = p.dx;
    derived["dt"] = p.dt;
    derived["S"] = p.S();
    derived["domain"] = {{"xmin", g.xmin}, {"xmax", g.xmax}, {"n-interior", g.n_interior}};
    derived["ic"] = c.ic;
    derived["t-final"] = c.t_final;
    derived["steps"] = tr.steps;
    derived["unstable"] = tr.unstable;
    if (tr.unstable) {
        derived["overflow-step"] = tr.log.overflow_step;
    }
    if (p.short_memory > 0) {
        derived["dropped-tail-bound"] = tr.log.dropped_tail;
    }
    derived["snapshots"] = snaps;
    write_manifest(c.output, "solve", j, derived, {c.output});

    return {tr.unstable, tr.steps};
}

// ---------------------------------------------------------------------------
// scan-stability: empirical onset per memory exponent, optionally threaded.
// ---------------------------------------------------------------------------

struct scan_config {
    std::vector<double> gammas;
    scan_options opt;
    scan_problem problem = scan_problem::absorbing;
    std::string output;
};

inline scan_config parse_scan_config(const json& j) {
    cfg::require_object(j);
    cfg::reject_unknown_keys(j, {"gamma", "gamma-list", "coeff-order", "M", "scan-step",
                                 "start-factor", "problem", "N", "dt", "half-nodes", "xi",
                                 "dm", "K", "output"});
    scan_config c;
    const bool have_one = j.contains("gamma");
    const bool have_list = j.contains("gamma-list");
    if (have_one == have_list) {
        throw parse_error("gamma", "give exactly one of 'gamma' or 'gamma-list'");
    }
    if (have_one) {
        c.gammas = {cfg::memory_exponent(j)};
    } else {
        c.gammas = cfg::number_list(j, "gamma-list");
        for (double g : c.gammas) {
            if (!(g > 0.0) || !(g <= 1.0)) {
                throw parse_error("gamma-list", "entries must lie in (0, 1]");
            }
        }
    }
    c.opt.coeff_order = cfg::coeff_order(j);
    c.opt.M = static_cast<long>(cfg::integer(j, "M", 1000));
    c.opt.scan_step = cfg::positive_number(j, "scan-step", 1e-3);
    c.opt.start_factor = cfg::positive_number(j, "start-factor", 0.98);
    c.opt.K = cfg::positive_number(j, "K", 1.0);
    c.opt.N = static_cast<long>(cfg::integer(j, "N", 5));
    if (c.opt.N < 1) {
        throw parse_error("N", "must be at least 1");
    }
    c.opt.dt_propagator = cfg::positive_number(j, "dt", 5e-4);
    c.opt.propagator_half = static_cast<long>(cfg::integer(j, "half-nodes", 50));
    if (c.opt.propagator_half < 1) {
        throw parse_error("half-nodes", "must be at least 1");
    }
    c.opt.detector.xi = cfg::positive_number(j, "xi", 5.0);
    c.opt.detector.dm = static_cast<long>(cfg::integer(j, "dm", 10));
    if (c.opt.detector.dm < 1) {
        throw parse_error("dm", "must be at least 1");
    }
    const std::string which = cfg::text(j, "problem", std::string("absorbing"));
    if (which == "absorbing") {
        c.problem = scan_problem::absorbing;
    } else if (which == "propagator") {
        c.problem = scan_problem::propagator;
    } else {
        throw parse_error("problem", "expected 'absorbing' or 'propagator'");
    }
    c.output = cfg::text(j, "output");
    return c;
}

inline unsigned worker_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) {
        n = 1;
    }
    if (const char* env = std::getenv("FRACDIFF_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) {
            n = static_cast<unsigned>(v);
        }
    }
    const std::size_t cap = jobs == 0 ? 1 : jobs;
    return static_cast<unsigned>(std::min<std::size_t>(n, cap));
}

inline void run_scan(const json& j, std::ostream&) {
    const scan_config c = parse_scan_config(j);
    const std::size_t n = c.gammas.size();
    std::vector<stability_report> reports(n);

    const unsigned threads = worker_count(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                reports[i] = onset_scan(c.gammas[i], c.problem, c.opt);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    std::vector<std::vector<double>> rows;
    json per_gamma = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const stability_report& r = reports[i];
        const double S_theory = bound_limit(r.gamma, c.opt.coeff_order);
        const double corrected = r.S_min * r.sin2_correction;
        rows.push_back({r.gamma, static_cast<double>(c.opt.coeff_order),
                        static_cast<double>(r.M), r.S_min, corrected, S_theory});
        per_gamma.push_back({{"gamma", r.gamma},
                             {"S_min", r.S_min},
                             {"S_min_corrected", corrected},
                             {"S_theory", S_theory},
                             {"sin2-correction", r.sin2_correction},
                             {"first-unstable-step", r.first_unstable_step}});
    }
    write_csv_file(c.output, {"gamma", "order", "M", "S_min", "S_min_corrected", "S_theory"},
                   rows);

    json derived;
    derived["threads"] = threads;
    derived["problem"] = j.value("problem", "absorbing");
    derived["results"] = per_gamma;
    write_manifest(c.output, "scan-stability", j, derived, {c.output});
}

// ---------------------------------------------------------------------------
// coeffs: dump the memory-weight table.
// ---------------------------------------------------------------------------

inline void run_coeffs(const json& j, std::ostream&) {
    cfg::require_object(j);
    cfg::reject_unknown_keys(j, {"alpha", "n", "coeff-order", "output"});
    const double alpha = cfg::number(j, "alpha");
    if (!(alpha >= 0.0) || !(alpha <= 1.0)) {
        throw parse_error("alpha", "must lie in [0, 1]");
    }
    const long long n = cfg::integer(j, "n");
    if (n < 0) {
        throw parse_error("n", "must be non-negative");
    }
    const int order = cfg::coeff_order(j);
    const std::string output = cfg::text(j, "output");

    const coefficient_table w = coefficients(alpha, n, order);
    std::vector<std::vector<double>> rows;
    for (long k = 0; k <= static_cast<long>(n); ++k) {
        rows.push_back({static_cast<double>(k), w[k]});
    }
    write_csv_file(output, {"k", "omega"}, rows);

    json derived;
    derived["alpha"] = alpha;
    derived["coeff-order"] = order;
    derived["n"] = n;
    write_manifest(output, "coeffs", j, derived, {output});
}

// ---------------------------------------------------------------------------
// ml: tabulate the relaxation function E_gamma(-x) on a grid.
// ---------------------------------------------------------------------------

inline void run_ml(const json& j, std::ostream&) {
    cfg::require_object(j);
    cfg::reject_unknown_keys(j, {"gamma", "x-grid", "x-min", "x-max", "x-step", "output"});
    const double gamma = cfg::memory_exponent(j);
    const std::string output = cfg::text(j, "output");

    std::vector<double> xs;
    if (j.contains("x-grid")) {
        if (j.contains("x-min") || j.contains("x-max") || j.contains("x-step")) {
            throw parse_error("x-grid", "give either 'x-grid' or the x-min/x-max/x-step "
                                        "triple, not both");
        }
        xs = cfg::number_list(j, "x-grid");
    } else {
        const double x_min = cfg::number(j, "x-min", 0.0);
        const double x_max = cfg::number(j, "x-max");
        const double x_step = cfg::positive_number(j, "x-step");
        if (!(x_max >= x_min)) {
            throw parse_error("x-max", "must be at least 'x-min'");
        }
        for (double x = x_min; x <= x_max + 1e-12 * std::max(1.0, std::abs(x_max));
             x += x_step) {
            xs.push_back(x);
        }
    }
    for (double x : xs) {
        if (!(x >= 0.0)) {
            throw parse_error("x-grid", "entries must be non-negative");
        }
    }

    std::vector<std::vector<double>> rows;
    rows.reserve(xs.size());
    for (double x : xs) {
        rows.push_back({x, mittag_leffler_neg(gamma, x)});
    }
    write_csv_file(output, {"x", "value"}, rows);

    json derived;
    derived["gamma"] = gamma;
    derived["points"] = xs.size();
    write_manifest(output, "ml", j, derived, {output});
}

// ---------------------------------------------------------------------------
// convergence: mesh-refinement study against the series solution.
// ---------------------------------------------------------------------------

inline void run_convergence(const json& j, std::ostream&) {
    cfg::require_object(j);
    cfg::reject_unknown_keys(j, {"gamma", "S", "dx-list", "t-measure", "K", "coeff-order",
                                 "output"});
    const double gamma = cfg::memory_exponent(j);
    const double S = cfg::positive_number(j, "S");
    const std::vector<double> dx_list = cfg::number_list(j, "dx-list");
    const double t_measure = cfg::positive_number(j, "t-measure");
    const double K = cfg::positive_number(j, "K", 1.0);
    const int order = cfg::coeff_order(j);
    const std::string output = cfg::text(j, "output");

    const convergence_result r = convergence_order(gamma, S, dx_list, t_measure, K, order);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.dx.size(); ++i) {
        rows.push_back({r.dx[i], r.dt[i], r.l_inf[i], r.l2[i]});
    }
    write_csv_file(output, {"dx", "dt", "l_inf", "l2"}, rows,
                   {"order," + format_double(r.order)});

    json derived;
    derived["gamma"] = gamma;
    derived["S"] = S;
    derived["order"] = r.order;
    derived["t-snap"] = r.t_snap;
    write_manifest(output, "convergence", j, derived, {output});
}

}  // namespace fracdiff

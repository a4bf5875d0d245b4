#pragma once

// Command-line front end.  Thin layer over experiment.hpp: CLI11 turns flags
// into a JSON overlay, an optional --config file supplies the base object,
// and flags win on conflict.  Errors leave as single-line JSON records on
// the error stream with a stable exit code:
//   0  success            1  configuration / usage problem
//   2  numerical domain   3  run detected an instability (artifacts written)

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fracdiff/experiment.hpp"

namespace fracdiff {

namespace climap {

// Deferred flag -> JSON-key transfers, applied only for flags actually given.
struct overlay {
    std::vector<std::function<void(json&)>> setters;

    void apply(json& j) const {
        for (const auto& s : setters) {
            s(j);
        }
    }
};

inline void add_number(CLI::App* cmd, overlay& ov, const std::string& flag,
                       const std::string& key, const std::string& desc) {
    auto v = std::make_shared<double>();
    auto* opt = cmd->add_option(flag, *v, desc);
    ov.setters.push_back([v, opt, key](json& j) {
        if (opt->count() > 0) {
            j[key] = *v;
        }
    });
}

inline void add_integer(CLI::App* cmd, overlay& ov, const std::string& flag,
                        const std::string& key, const std::string& desc) {
    auto v = std::make_shared<long long>();
    auto* opt = cmd->add_option(flag, *v, desc);
    ov.setters.push_back([v, opt, key](json& j) {
        if (opt->count() > 0) {
            j[key] = *v;
        }
    });
}

inline void add_text(CLI::App* cmd, overlay& ov, const std::string& flag,
                     const std::string& key, const std::string& desc) {
    auto v = std::make_shared<std::string>();
    auto* opt = cmd->add_option(flag, *v, desc);
    ov.setters.push_back([v, opt, key](json& j) {
        if (opt->count() > 0) {
            j[key] = *v;
        }
    });
}

inline void add_numbers(CLI::App* cmd, overlay& ov, const std::string& flag,
                        const std::string& key, const std::string& desc) {
    auto v = std::make_shared<std::vector<double>>();
    auto* opt = cmd->add_option(flag, *v, desc)->delimiter(',');
    ov.setters.push_back([v, opt, key](json& j) {
        if (opt->count() > 0) {
            j[key] = *v;
        }
    });
}

struct command {
    CLI::App* app = nullptr;
    std::shared_ptr<std::string> config_path = std::make_shared<std::string>();
    overlay flags;

    json merged() const {
        json base = json::object();
        if (!config_path->empty()) {
            std::ifstream f(*config_path);
            if (!f) {
                throw parse_error("config", "cannot open '" + *config_path + "'");
            }
            try {
                base = json::parse(f);
            } catch (const json::parse_error& e) {
                throw parse_error("config", e.what());
            }
            if (!base.is_object()) {
                throw parse_error("config", "file must hold a JSON object");
            }
        }
        flags.apply(base);
        return base;
    }
};

inline command make_command(CLI::App& app, const std::string& name, const std::string& desc) {
    command c;
    c.app = app.add_subcommand(name, desc);
    c.app->add_option("--config", *c.config_path,
                      "JSON configuration file; explicit flags override its keys");
    return c;
}

inline void emit_error(std::ostream& err, const std::string& kind, const std::string& message,
                       const std::string& key = {}) {
    json rec;
    rec["error"] = kind;
    if (!key.empty()) {
        rec["key"] = key;
    }
    rec["message"] = message;
    err << rec.dump() << '\n';
}

}  // namespace climap

inline int run_tool(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    using climap::add_integer;
    using climap::add_number;
    using climap::add_numbers;
    using climap::add_text;

    CLI::App app{"Explicit-memory finite-difference toolkit for subdiffusive transport"};
    app.require_subcommand(1);

    climap::command solve = climap::make_command(app, "solve",
                                                 "Run the time stepper and write snapshots");
    add_number(solve.app, solve.flags, "--gamma", "gamma", "memory exponent in (0, 1]");
    add_number(solve.app, solve.flags, "--K", "K", "generalized diffusion coefficient");
    add_integer(solve.app, solve.flags, "--coeff-order", "coeff-order",
                "memory-weight generator order (1 or 2)");
    add_integer(solve.app, solve.flags, "--short-memory", "short-memory",
                "keep only this many recent steps in the convolution (0 = all)");
    add_number(solve.app, solve.flags, "--dt", "dt", "time step (alternative to --S)");
    add_number(solve.app, solve.flags, "--S", "S",
               "diffusion number K dt^gamma / dx^2 (alternative to --dt)");
    add_number(solve.app, solve.flags, "--t-final", "t-final", "end time of the run");
    add_numbers(solve.app, solve.flags, "--snapshot-times", "snapshot-times",
                "comma-separated times to store (default: t-final)");
    add_number(solve.app, solve.flags, "--xmin", "xmin", "left domain edge (default 0)");
    add_number(solve.app, solve.flags, "--xmax", "xmax", "right domain edge (default 1)");
    add_number(solve.app, solve.flags, "--dx", "dx",
               "mesh spacing (alternative to --n-interior)");
    add_integer(solve.app, solve.flags, "--n-interior", "n-interior",
                "number of interior nodes (alternative to --dx)");
    add_text(solve.app, solve.flags, "--ic", "ic",
             "initial condition: delta, delta-smoothed, parabola, mode, tabulated");
    add_number(solve.app, solve.flags, "--ic-x0", "ic-x0",
               "spike location for the delta starts (default: domain center)");
    add_integer(solve.app, solve.flags, "--ic-mode-n", "ic-mode-n",
                "sine-mode index for ic = mode");
    add_text(solve.app, solve.flags, "--ic-file", "ic-file",
             "CSV with a 'u' column holding interior values, for ic = tabulated");
    add_text(solve.app, solve.flags, "--output", "output", "CSV artifact path");

    climap::command scan = climap::make_command(app, "scan-stability",
                                                "Locate the empirical instability onset");
    add_number(scan.app, scan.flags, "--gamma", "gamma", "single memory exponent");
    add_numbers(scan.app, scan.flags, "--gamma-list", "gamma-list",
                "comma-separated memory exponents");
    add_integer(scan.app, scan.flags, "--coeff-order", "coeff-order",
                "memory-weight generator order (1 or 2)");
    add_integer(scan.app, scan.flags, "--M", "M", "steps per probe run (default 1000)");
    add_number(scan.app, scan.flags, "--scan-step", "scan-step",
               "increment of the diffusion number between probes");
    add_number(scan.app, scan.flags, "--start-factor", "start-factor",
               "first probe at this multiple of the analytic bound");
    add_text(scan.app, scan.flags, "--problem", "problem",
             "test problem: absorbing (default) or propagator");
    add_integer(scan.app, scan.flags, "--N", "N",
                "absorbing problem size: 2N-1 interior nodes");
    add_number(scan.app, scan.flags, "--dt", "dt", "propagator problem time step");
    add_integer(scan.app, scan.flags, "--half-nodes", "half-nodes",
                "propagator problem cells per half width");
    add_number(scan.app, scan.flags, "--xi", "xi", "detector ratio threshold");
    add_integer(scan.app, scan.flags, "--dm", "dm", "detector window length in steps");
    add_number(scan.app, scan.flags, "--K", "K", "generalized diffusion coefficient");
    add_text(scan.app, scan.flags, "--output", "output", "CSV artifact path");

    climap::command coeffs = climap::make_command(app, "coeffs",
                                                  "Write the memory-weight table");
    add_number(coeffs.app, coeffs.flags, "--alpha", "alpha",
               "weight exponent in [0, 1] (1 - gamma for a solver run)");
    add_integer(coeffs.app, coeffs.flags, "--n", "n", "largest index to write");
    add_integer(coeffs.app, coeffs.flags, "--coeff-order", "coeff-order",
                "generator order (1 or 2)");
    add_text(coeffs.app, coeffs.flags, "--output", "output", "CSV artifact path");

    climap::command ml = climap::make_command(app, "ml",
                                              "Tabulate the relaxation function E_gamma(-x)");
    add_number(ml.app, ml.flags, "--gamma", "gamma", "memory exponent in (0, 1]");
    add_numbers(ml.app, ml.flags, "--x-grid", "x-grid", "comma-separated evaluation points");
    add_number(ml.app, ml.flags, "--x-min", "x-min", "uniform grid start (default 0)");
    add_number(ml.app, ml.flags, "--x-max", "x-max", "uniform grid end");
    add_number(ml.app, ml.flags, "--x-step", "x-step", "uniform grid spacing");
    add_text(ml.app, ml.flags, "--output", "output", "CSV artifact path");

    climap::command conv = climap::make_command(app, "convergence",
                                                "Mesh-refinement error study");
    add_number(conv.app, conv.flags, "--gamma", "gamma", "memory exponent in (0, 1]");
    add_number(conv.app, conv.flags, "--S", "S", "diffusion number held fixed across meshes");
    add_numbers(conv.app, conv.flags, "--dx-list", "dx-list",
                "comma-separated decreasing mesh spacings (at least three)");
    add_number(conv.app, conv.flags, "--t-measure", "t-measure", "time of the error snapshot");
    add_number(conv.app, conv.flags, "--K", "K", "generalized diffusion coefficient");
    add_integer(conv.app, conv.flags, "--coeff-order", "coeff-order",
                "memory-weight generator order (1 or 2)");
    add_text(conv.app, conv.flags, "--output", "output", "CSV artifact path");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("fracdiff");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        climap::emit_error(err, "parse", e.what());
        return 1;
    }

    try {
        if (solve.app->parsed()) {
            const solve_outcome res = run_solve(solve.merged(), err);
            if (res.unstable) {
                climap::emit_error(err, "instability",
                                   "run overflowed; partial artifacts were written");
                return 3;
            }
        } else if (scan.app->parsed()) {
            run_scan(scan.merged(), err);
        } else if (coeffs.app->parsed()) {
            run_coeffs(coeffs.merged(), err);
        } else if (ml.app->parsed()) {
            run_ml(ml.merged(), err);
        } else if (conv.app->parsed()) {
            run_convergence(conv.merged(), err);
        }
        return 0;
    } catch (const parse_error& e) {
        climap::emit_error(err, "parse", e.what(), e.key);
        return 1;
    } catch (const domain_error& e) {
        climap::emit_error(err, "domain", e.what());
        return 2;
    } catch (const std::out_of_range& e) {
        climap::emit_error(err, "domain", e.what());
        return 2;
    }
}

}  // namespace fracdiff

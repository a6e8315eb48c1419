#include "eeb/cli.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "eeb/kernel.hpp"
#include "eeb/oracle.hpp"
#include "eeb/pricer.hpp"

#ifndef EEB_VERSION
#define EEB_VERSION "0.0.0"
#endif

namespace eeb {

namespace {

/// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the error of the
/// lowest failing index so failures are reported deterministically.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

bool is_family(const RunConfig& cfg) { return !cfg.v_grid.empty(); }

/// Boundary for one strike under the model with volatility scaled by `scale`.
ExerciseBoundary solve_for(const RunConfig& cfg, double scale, double K, int threads) {
    const ModelSpec m = cfg.model_for(K, scale);
    const Contract c = cfg.contract(K);
    const auto cos = cfg.cos_for(K);
    if (const NIG* nig = std::get_if<NIG>(&m)) {
        JumpSolverOptions opt = cfg.jump;
        opt.threads = threads;
        return solve_boundary_jump(*nig, c, cfg.solver, *cos, opt);
    }
    if (is_family(cfg)) return solve_boundary_family(m, c, cfg.solver, *cos, cfg.v_grid, threads, cfg.t0);
    if (cos) return solve_boundary_cos(m, c, cfg.solver, *cos, -1.0, cfg.t0);
    return solve_boundary_density(m, c, cfg.solver, cfg.t0);
}

/// One boundary per strike; strikes run in parallel unless the solver parallelises inside.
std::vector<ExerciseBoundary> solve_all(const RunConfig& cfg, int threads, double scale = 1.0) {
    std::vector<ExerciseBoundary> out(cfg.strikes.size());
    const bool inner = is_family(cfg) || std::holds_alternative<NIG>(cfg.model);
    parallel_for(out.size(), inner ? 1 : threads,
                 [&](std::size_t i) { out[i] = solve_for(cfg, scale, cfg.strikes[i], inner ? threads : 1); });
    return out;
}

double row_variance(const RunConfig& cfg, const ExerciseBoundary& b, Eigen::Index row) {
    if (b.variance_axis.size() > row) return b.variance_axis[row];
    return initial_variance(cfg.model);
}

std::shared_ptr<TransitionKernel> kernel_for(const RunConfig& cfg, double scale, double K, double v) {
    return make_kernel(cfg.model_for(K, scale), cfg.cos_for(K), is_family(cfg) ? v : -1.0);
}

void require_pricing_model(const RunConfig& cfg) {
    if (std::holds_alternative<NIG>(cfg.model))
        throw ConfigError("model.type", "nig supports the boundary command only; pricing needs the premium "
                                        "under jumps, which this engine does not implement");
}

std::vector<double> spots_for(const RunConfig& cfg, double K) {
    return cfg.lattice.spots.empty() ? std::vector<double>{K} : cfg.lattice.spots;
}

std::string region_name(Region r) { return r == Region::exercise ? "exercise" : "continuation"; }

std::int64_t as_int(bool b) { return b ? 1 : 0; }

/// One lattice point: strike index, boundary row and (t, x).
struct Point {
    std::size_t strike;
    Eigen::Index row;
    double t, x;
};

std::vector<Point> lattice_points(const RunConfig& cfg, const std::vector<ExerciseBoundary>& bs) {
    std::vector<Point> pts;
    for (std::size_t k = 0; k < bs.size(); ++k)
        for (Eigen::Index r = 0; r < bs[k].rows(); ++r)
            for (double t : cfg.lattice.times)
                for (double x : spots_for(cfg, cfg.strikes[k])) pts.push_back({k, r, t, x});
    return pts;
}

/// Kernels per (strike, row), built once.
std::vector<std::vector<std::shared_ptr<TransitionKernel>>> kernels_for(
    const RunConfig& cfg, const std::vector<ExerciseBoundary>& bs, double scale = 1.0) {
    std::vector<std::vector<std::shared_ptr<TransitionKernel>>> ks(bs.size());
    for (std::size_t k = 0; k < bs.size(); ++k)
        for (Eigen::Index r = 0; r < bs[k].rows(); ++r)
            ks[k].push_back(kernel_for(cfg, scale, cfg.strikes[k], row_variance(cfg, bs[k], r)));
    return ks;
}

void check_rows(const std::vector<ExerciseBoundary>& bs, const RunConfig& cfg) {
    for (std::size_t k = 0; k < bs.size(); ++k)
        for (std::size_t r = 0; r < bs[k].row_status.size(); ++r)
            if (bs[k].row_status[r] != "ok")
                throw NumericalError("boundary failed for strike " + format_double(cfg.strikes[k]) +
                                     " row " + std::to_string(r) + ": " + bs[k].row_status[r]);
}

bool constant_curve(const Curve& c) { return c.kind() == Curve::Kind::constant; }

struct OracleRow {
    std::string kind;
    double strike, t, x, engine, oracle, tolerance;
    bool relative;
};

}  // namespace

CommandResult cmd_boundary(const RunConfig& cfg, int threads) {
    if (std::holds_alternative<NIG>(cfg.model) && cfg.t0 != 0.0)
        throw ConfigError("solver.t0", "the jump solver marches from t = 0");
    const auto bs = solve_all(cfg, threads);
    CommandResult res{CsvTable({"strike", "v", "t", "X_B", "iterations", "residual", "status"})};
    for (std::size_t k = 0; k < bs.size(); ++k) {
        const ExerciseBoundary& b = bs[k];
        for (const auto& d : b.diagnostics) res.table.note("strike=" + format_double(b.strike) + " " + d);
        for (Eigen::Index r = 0; r < b.rows(); ++r) {
            const std::string status = r < static_cast<Eigen::Index>(b.row_status.size()) ? b.row_status[r] : "ok";
            if (status != "ok") res.exit_code = exit_numerical;
            for (Eigen::Index i = 0; i < b.times.size(); ++i)
                res.table.add_row({b.strike, row_variance(cfg, b, r), b.times[i], b.values(r, i),
                                   static_cast<std::int64_t>(b.iterations(r, i)), b.residuals(r, i), status});
        }
    }
    return res;
}

CommandResult cmd_price(const RunConfig& cfg, int threads) {
    require_pricing_model(cfg);
    const auto bs = solve_all(cfg, threads);
    check_rows(bs, cfg);
    const auto ks = kernels_for(cfg, bs);
    const auto pts = lattice_points(cfg, bs);
    std::vector<PricingResult> out(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        const Point& p = pts[i];
        out[i] = price_american(*ks[p.strike][p.row], bs[p.strike], cfg.contract(cfg.strikes[p.strike]), p.t,
                                p.x, p.row);
    });
    CommandResult res{CsvTable({"strike", "v", "t", "x", "european", "eep", "american", "region"})};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        res.table.add_row({cfg.strikes[p.strike], row_variance(cfg, bs[p.strike], p.row), p.t, p.x,
                           out[i].european, out[i].eep, out[i].american, region_name(out[i].region)});
    }
    return res;
}

CommandResult cmd_greeks(const RunConfig& cfg, int threads) {
    require_pricing_model(cfg);
    const auto bs = solve_all(cfg, threads);
    check_rows(bs, cfg);
    const auto ks = kernels_for(cfg, bs);
    const auto pts = lattice_points(cfg, bs);

    constexpr double kScaleStep = 1e-3;
    std::vector<ExerciseBoundary> up, down;
    std::vector<std::vector<std::shared_ptr<TransitionKernel>>> ks_up, ks_down;
    if (cfg.fd_compare) {
        up = solve_all(cfg, threads, 1.0 + kScaleStep);
        down = solve_all(cfg, threads, 1.0 - kScaleStep);
        check_rows(up, cfg);
        check_rows(down, cfg);
        ks_up = kernels_for(cfg, up, 1.0 + kScaleStep);
        ks_down = kernels_for(cfg, down, 1.0 - kScaleStep);
    }

    std::vector<PricingResult> out(pts.size());
    std::vector<std::array<double, 4>> fd(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        const Point& p = pts[i];
        const double K = cfg.strikes[p.strike];
        const Contract c = cfg.contract(K);
        const TransitionKernel& k = *ks[p.strike][p.row];
        const ExerciseBoundary& b = bs[p.strike];
        out[i] = price_with_greeks(k, b, c, p.t, p.x, p.row);
        if (!cfg.fd_compare) return;
        auto V = [&](double t, double x) { return price_american(k, b, c, t, x, p.row).american; };
        const double h = 1e-3 * K;
        const double v0 = out[i].american, vp = V(p.t, p.x + h), vm = V(p.t, p.x - h);
        const double ht = 1e-4 * (cfg.maturity - cfg.t0);
        const double ta = std::max(cfg.t0, p.t - ht), tb = std::min(cfg.maturity, p.t + ht);
        const double vu = price_american(*ks_up[p.strike][p.row], up[p.strike], c, p.t, p.x, p.row).american;
        const double vd = price_american(*ks_down[p.strike][p.row], down[p.strike], c, p.t, p.x, p.row).american;
        fd[i] = {(vp - vm) / (2.0 * h), (vp - 2.0 * v0 + vm) / (h * h), (V(tb, p.x) - V(ta, p.x)) / (tb - ta),
                 (vu - vd) / (2.0 * kScaleStep)};
    });

    std::vector<std::string> cols{"strike", "v", "t", "x", "american", "region",
                                  "delta", "gamma", "theta", "vega", "near_boundary"};
    if (cfg.fd_compare)
        for (const char* c : {"fd_delta", "fd_gamma", "fd_theta", "fd_vega"}) cols.emplace_back(c);
    CommandResult res{CsvTable(cols)};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        const Greeks& g = *out[i].greeks;
        std::vector<CsvCell> row{cfg.strikes[p.strike], row_variance(cfg, bs[p.strike], p.row), p.t, p.x,
                                 out[i].american, region_name(out[i].region), g.delta, g.gamma, g.theta, g.vega,
                                 as_int(g.near_boundary)};
        if (cfg.fd_compare)
            for (double d : fd[i]) row.emplace_back(d);
        res.table.add_row(std::move(row));
    }
    return res;
}

CommandResult cmd_oracle_compare(const RunConfig& cfg, int threads) {
    std::vector<OracleRow> rows;
    const OracleOptions& o = cfg.oracle;

    if (const auto* bsm = std::get_if<BlackScholesTD>(&cfg.model)) {
        if (!constant_curve(bsm->r) || !constant_curve(bsm->q) || !constant_curve(bsm->sigma))
            throw ConfigError("model", "oracle-compare needs constant Black-Scholes parameters");
        const double r = bsm->r(0.0), q = bsm->q(0.0), sigma = bsm->sigma(0.0);
        const auto bs = solve_all(cfg, threads);
        check_rows(bs, cfg);
        const auto ks = kernels_for(cfg, bs);
        const auto pts = lattice_points(cfg, bs);
        const bool put = cfg.kind == OptionKind::put;
        std::vector<std::vector<OracleRow>> per(pts.size());
        parallel_for(pts.size(), threads, [&](std::size_t i) {
            const Point& p = pts[i];
            const double K = cfg.strikes[p.strike];
            const PricingResult e = price_american(*ks[p.strike][0], bs[p.strike], cfg.contract(K), p.t, p.x);
            const Contract rest{cfg.kind, K, cfg.maturity - p.t};
            per[i].push_back({"binomial", K, p.t, p.x, e.american,
                              binomial_american(rest, p.x, r, q, sigma, o.binomial_steps), o.price_tolerance, true});
            if (put) {
                const LatticeSolution ls = psor_american_put(*bsm, rest, o.lattice);
                per[i].push_back({"psor", K, p.t, p.x, e.american, ls.price(p.x), o.price_tolerance, true});
            }
            if (bsm->r.is_zero() && put) {
                per[i].push_back({"european_equality", K, p.t, p.x, e.american, e.european, 0.0, false});
                per[i].push_back({"eep_zero", K, p.t, p.x, e.eep, 0.0, 0.0, false});
            }
        });
        for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
    } else if (std::holds_alternative<ArithmeticOU>(cfg.model)) {
        if (cfg.kind != OptionKind::put)
            throw ConfigError("contract.kind", "the OU lattice oracle prices puts only");
        const auto bs = solve_all(cfg, threads);
        check_rows(bs, cfg);
        std::vector<std::vector<OracleRow>> per(bs.size());
        parallel_for(bs.size(), threads, [&](std::size_t k) {
            const double K = cfg.strikes[k];
            const LatticeSolution ls =
                psor_american_put(std::get<ArithmeticOU>(cfg.model_for(K)), cfg.contract(K), o.lattice);
            for (Eigen::Index i = 0; i < bs[k].times.size(); ++i) {
                const double t = bs[k].times[i];
                per[k].push_back({"boundary", K, t, std::nan(""), bs[k].values(0, i), ls.boundary_at(t),
                                  o.boundary_tolerance * K, false});
            }
        });
        for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
    } else {
        throw ConfigError("model.type", "no oracle for model " + model_name(cfg.model) +
                                            " (black_scholes with constant parameters, ou)");
    }

    CommandResult res{CsvTable(
        {"case", "strike", "t", "x", "engine", "oracle", "abs_gap", "rel_gap", "tolerance", "pass"})};
    res.table.note("tolerance applies to rel_gap for binomial and psor rows, to abs_gap otherwise");
    for (const OracleRow& r : rows) {
        const double abs_gap = std::abs(r.engine - r.oracle);
        const double rel_gap = r.oracle != 0.0 ? abs_gap / std::abs(r.oracle) : abs_gap;
        const double gap = r.relative ? rel_gap : abs_gap;
        const bool pass = std::isfinite(gap) && gap <= r.tolerance;
        if (!pass) res.exit_code = exit_tolerance;
        res.table.add_row({r.kind, r.strike, r.t, r.x, r.engine, r.oracle, abs_gap, rel_gap, r.tolerance,
                           std::string(pass ? "PASS" : "FAIL")});
    }
    return res;
}

int engine_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"American option early exercise boundary engine", "engine"};
    app.set_version_flag("--version", std::string("eebound ") + EEB_VERSION);
    app.require_subcommand(1);

    std::string config_path, out_path;
    int threads = 1;
    std::uint64_t seed = 0;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"boundary", "solve the exercise boundary"},
        {"price", "American price, European value and premium on a lattice"},
        {"greeks", "delta, gamma, theta and vega on a lattice"},
        {"oracle-compare", "compare against the lattice and tree oracles"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sc = app.add_subcommand(name, help);
        sc->add_option("--config", config_path, "JSON configuration (schema 1)")->required();
        sc->add_option("--out", out_path, "CSV output path (default: stdout)");
        sc->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sc->add_option("--seed", seed, "seed recorded in the configuration hash");
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const RunConfig cfg = load_config(config_path, seed);
        CommandResult res = command == "boundary" ? cmd_boundary(cfg, threads)
                            : command == "price"  ? cmd_price(cfg, threads)
                            : command == "greeks" ? cmd_greeks(cfg, threads)
                                                  : cmd_oracle_compare(cfg, threads);
        const std::string text = res.table.str(EEB_VERSION, config_hash(cfg));
        if (out_path.empty()) {
            out << text;
        } else {
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw ConfigError("--out", "cannot open '" + out_path + "' for writing");
            f << text;
            if (!f.flush()) throw ConfigError("--out", "write to '" + out_path + "' failed");
        }
        if (res.exit_code == exit_tolerance) err << "engine: oracle comparison outside tolerance\n";
        if (res.exit_code == exit_numerical) err << "engine: some boundary rows failed (see status)\n";
        return res.exit_code;
    } catch (const ValidationError& e) {
        err << "engine: config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "engine: numerical error: " << e.what() << "\n";
        return exit_numerical;
    }
}

}  // namespace eeb

#include "eeb/boundary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "eeb/errors.hpp"

namespace eeb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void Contract::validate() const {
    if (!(strike > 0.0)) throw ValidationError("contract: strike must be positive");
    if (!(maturity > 0.0)) throw ValidationError("contract: maturity must be positive");
}

void SolverConfig::validate() const {
    if (steps < 2) throw ValidationError("solver: steps (M) must be at least 2");
    if (tolerance < 0.0) throw ValidationError("solver: tolerance must be positive");
    if (max_iterations < 1) throw ValidationError("solver: max_iterations must be positive");
    if (substeps < 1) throw ValidationError("solver: substeps must be positive");
}

double ExerciseBoundary::at(double t, Eigen::Index r) const {
    const Eigen::Index n = times.size();
    if (n == 0 || t < times[0] - 1e-12 || t > times[n - 1] + 1e-12)
        throw DomainError("boundary: t outside the solved grid");
    if (n == 1 || t <= times[0]) return values(r, 0);
    if (t >= times[n - 1]) return values(r, n - 1);
    const auto it = std::upper_bound(times.data(), times.data() + n, t);
    const Eigen::Index j = std::distance(times.data(), it);
    const double a = values(r, j - 1), b = values(r, j);
    if (!std::isfinite(a) || !std::isfinite(b)) return std::isfinite(a) ? b : a;
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return a + boundary_interpolation_weight(w, j == n - 1) * (b - a);
}

double boundary_interpolation_weight(double lambda, bool last_interval) {
    return last_interval ? 1.0 - std::sqrt(std::max(1.0 - lambda, 0.0)) : lambda;
}

double terminal_boundary_diffusion(double r_T, double q_T, double K) {
    if (!(K > 0.0)) throw DomainError("terminal boundary: K must be positive");
    if (q_T <= 0.0) return K;
    return K * std::clamp(r_T / q_T, 0.0, 1.0);
}

double terminal_boundary_diffusion_call(double r_T, double q_T, double K) {
    if (!(K > 0.0)) throw DomainError("terminal boundary: K must be positive");
    if (q_T <= 0.0) return kInf;
    return K * std::max(1.0, r_T / q_T);
}

double terminal_boundary(const Curve& r, const Curve& q, const Contract& c) {
    const double T = c.maturity;
    return c.kind == OptionKind::put ? terminal_boundary_diffusion(r(T), q(T), c.strike)
                                     : terminal_boundary_diffusion_call(r(T), q(T), c.strike);
}

Eigen::VectorXd quadrature_weights(const Eigen::VectorXd& grid, SolverConfig::Rule rule) {
    const Eigen::Index n = grid.size() - 1;
    if (rule == SolverConfig::Rule::trapezoid || n < 2) return trapezoid_weights(grid);
    const double h = (grid[n] - grid[0]) / n;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
    Eigen::Index start = 0;
    if (n % 2 == 1) {
        const double c = 3.0 * h / 8.0;
        w[0] += c;
        w[1] += 3 * c;
        w[2] += 3 * c;
        w[3] += c;
        start = 3;
    }
    for (Eigen::Index j = start; j < n; j += 2) {
        w[j] += h / 3.0;
        w[j + 1] += 4.0 * h / 3.0;
        w[j + 2] += h / 3.0;
    }
    return w;
}

Eigen::VectorXd refine_grid(const Eigen::VectorXd& coarse, int substeps) {
    if (substeps < 1) throw ValidationError("refine_grid: substeps must be positive");
    const Eigen::Index n = coarse.size();
    if (n < 2 || substeps == 1) return coarse;
    Eigen::VectorXd fine((n - 1) * substeps + 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        for (int s = 0; s < substeps; ++s)
            fine[i * substeps + s] = coarse[i] + (coarse[i + 1] - coarse[i]) * s / substeps;
    fine[fine.size() - 1] = coarse[n - 1];
    return fine;
}

namespace {

/// Safeguarded secant on g (positive below the root) from the pair (x0, g0), x1 inside [a, b].
NodeRoot secant_loop(const std::function<double(double)>& g, NodeRoot& out, double a, double b, double x0,
                     double g0, double x1, double tol, int max_iterations, int node) {
    int slow = 0;
    while (true) {
        if (x1 <= a || x1 >= b) x1 = 0.5 * (a + b);
        const double g1 = g(x1);
        out.x = x1;
        out.residual = g1;
        if (std::abs(g1) <= tol) return out;
        (g1 > 0 ? a : b) = x1;
        if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(b), 1.0)) return out;
        if (out.iterations >= max_iterations) {
            std::ostringstream os;
            os << "boundary node " << node << ": no convergence after " << out.iterations
               << " iterations, residual " << out.residual;
            throw NodeError(os.str(), node, out.trace);
        }
        slow = std::abs(g1) > 0.5 * std::abs(g0) ? slow + 1 : 0;
        double x2 = g1 != g0 ? x1 - g1 * (x1 - x0) / (g1 - g0) : 0.5 * (a + b);
        if (slow >= 2 || !std::isfinite(x2) || x2 <= a || x2 >= b) {
            x2 = 0.5 * (a + b);
            slow = 0;
        }
        x0 = x1;
        g0 = g1;
        x1 = x2;
    }
}

std::function<double(double)> traced(const std::function<double(double)>& f, NodeRoot& out, double sign,
                                     int node) {
    return [&f, &out, sign, node](double x) {
        const double v = f(x);
        out.trace.push_back(v);
        ++out.iterations;
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "boundary node " << node << ": non-finite residual at X=" << x;
            throw NodeError(os.str(), node, out.trace);
        }
        return sign * v;
    };
}

}  // namespace

NodeRoot find_boundary_root(const std::function<double(double)>& f, double lo, double hi,
                            double guess, double tol, int max_iterations, double sign, int node) {
    NodeRoot out;
    const auto g = traced(f, out, sign, node);
    double a = lo, b = hi;
    const double x0 = std::clamp(guess, a, b);
    const double g0 = g(x0);
    out.x = x0;
    out.residual = g0;
    if (std::abs(g0) > tol) {
        (g0 > 0 ? a : b) = x0;
        const double step = 1e-4 * std::max(std::abs(x0), 1e-3 * (hi - lo));
        const double x1 = std::clamp(g0 > 0 ? x0 + step : x0 - step, a, b);
        secant_loop(g, out, a, b, x0, g0, x1, tol, max_iterations, node);
    }
    out.residual *= sign;
    return out;
}

NodeRoot find_boundary_root_bracketed(const std::function<double(double)>& f, double a, double fa, double b,
                                      double fb, double tol, int max_iterations, int node) {
    NodeRoot out;
    if (!(fa > 0.0 && fb <= 0.0)) throw ValidationError("find_boundary_root_bracketed: need f(a) > 0 >= f(b)");
    out.x = b;
    out.residual = fb;
    if (std::abs(fb) <= tol) return out;
    const auto g = traced(f, out, 1.0, node);
    const double x1 = a - fa * (b - a) / (fb - fa);
    return secant_loop(g, out, a, b, b, fb, x1, tol, max_iterations, node);
}

VolterraSystem::VolterraSystem(const TransitionKernel& kernel, Contract contract,
                               Eigen::VectorXd times, SolverConfig::Rule rule, int substeps)
    : kernel_(kernel), contract_(contract), times_(std::move(times)), substeps_(substeps) {
    contract_.validate();
    const Eigen::Index n = times_.size();
    if (n < 2) throw ShapeError("volterra: need at least two time nodes");
    fine_ = refine_grid(times_, substeps_);
    weights_.resize(n);
    const Eigen::Index nf = fine_.size();
    for (Eigen::Index i = 0; i < n; ++i)
        weights_[i] = quadrature_weights(fine_.tail(nf - i * substeps_), rule);
}

Eigen::VectorXd VolterraSystem::quadrature_boundary(const Eigen::VectorXd& b) const {
    if (substeps_ == 1) return b;
    Eigen::VectorXd out(fine_.size());
    for (Eigen::Index j = 0; j < fine_.size(); ++j) {
        const Eigen::Index c = std::min<Eigen::Index>(j / substeps_, b.size() - 1);
        const double lam = static_cast<double>(j - c * substeps_) / substeps_;
        if (lam == 0.0) {
            out[j] = b[c];
            continue;
        }
        const double a = b[c], e = b[c + 1];
        const double mu = boundary_interpolation_weight(lam, c + 2 == b.size());
        out[j] = std::isfinite(a) && std::isfinite(e) ? a + mu * (e - a) : kInf;
    }
    return out;
}

double VolterraSystem::H(double u, double X) const {
    const double rk = kernel_.rate()(u) * contract_.strike, qx = kernel_.dividend()(u) * X;
    return contract_.kind == OptionKind::put ? rk - qx : qx - rk;
}

std::pair<double, double> VolterraSystem::region(double xb) const {
    return contract_.kind == OptionKind::put ? std::pair{kernel_.support_lower(), xb}
                                             : std::pair{xb, kInf};
}

bool VolterraSystem::active(double u, double xb) const {
    if (!std::isfinite(xb)) return false;
    if (contract_.kind == OptionKind::put && xb <= 0.0) return false;
    return H(u, xb) > 0.0;
}

double VolterraSystem::payoff(double X) const {
    const double K = contract_.strike;
    return contract_.kind == OptionKind::put ? std::max(K - X, 0.0) : std::max(X - K, 0.0);
}

ValueSens VolterraSystem::european(double t, double x, unsigned flags) const {
    const double K = contract_.strike, T = contract_.maturity;
    const bool put = contract_.kind == OptionKind::put;
    ValueSens v;
    if (t >= T) {
        v.value = payoff(x);
        v.dx = put ? (x < K ? -1.0 : 0.0) : (x > K ? 1.0 : 0.0);
        return v;
    }
    const double D = discount_factor(kernel_.rate(), t, T);
    const auto [lo, hi] = put ? std::pair{kernel_.support_lower(), K} : std::pair{K, kInf};
    const MomentSens m = kernel_.moments(t, T, x, lo, hi, flags);
    const double s = put ? 1.0 : -1.0;
    auto leg = [&](const Moments& mm) { return s * D * (K * mm.m0 - mm.m1); };
    v.value = leg(m.value);
    v.dx = leg(m.dx);
    v.dxx = leg(m.dxx);
    v.dt = kernel_.rate()(t) * v.value + leg(m.dt);
    v.dscale = leg(m.dscale);
    return v;
}

double VolterraSystem::residual(Eigen::Index i, double X, const Eigen::VectorXd& boundary) const {
    const Eigen::Index n = times_.size();
    if (boundary.size() != n) throw ShapeError("volterra: boundary/grid mismatch");
    const double t = times_[i], K = contract_.strike;
    const Eigen::VectorXd& w = weights_[i];
    double value = payoff(X) - european(t, X).value;
    value -= w[0] * 0.5 * std::max(H(t, X), 0.0);
    const Curve& r = kernel_.rate();
    const Curve& q = kernel_.dividend();
    const bool put = contract_.kind == OptionKind::put;
    const Eigen::Index first = i * substeps_;
    auto level = [&](Eigen::Index j) {
        if (substeps_ == 1) return boundary[j];
        const Eigen::Index c = j / substeps_;
        const double lam = static_cast<double>(j - c * substeps_) / substeps_;
        const double a = c == i ? X : boundary[c];
        if (lam == 0.0) return a;
        const double e = boundary[c + 1];
        const double mu = boundary_interpolation_weight(lam, c + 2 == n);
        return std::isfinite(a) && std::isfinite(e) ? a + mu * (e - a) : kInf;
    };
    for (Eigen::Index j = first + 1; j < fine_.size(); ++j) {
        const double u = fine_[j], xb = level(j);
        if (!active(u, xb)) continue;
        const auto [lo, hi] = region(xb);
        const Moments m = kernel_.moments(t, u, X, lo, hi).value;
        const double h = r(u) * K * m.m0 - q(u) * m.m1;
        value -= w[j - first] * discount_factor(r, t, u) * (put ? h : -h);
    }
    return value;
}

namespace {

/// Sign changes of H along the solved boundary (more than one flags a multi-boundary topology).
int h_sign_changes(const VolterraSystem& sys, const Eigen::VectorXd& b) {
    int changes = 0, last = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (!std::isfinite(b[j])) continue;
        const double h = sys.H(sys.times()[j], b[j]);
        const int s = h > 0 ? 1 : (h < 0 ? -1 : 0);
        if (s != 0 && last != 0 && s != last) ++changes;
        if (s != 0) last = s;
    }
    return changes;
}

/// Put bracket [a, b] with f(a) > 0 >= f(b), grown outwards from x0 so the root found is
/// the one continuing the previous node rather than a spurious sign change far below it.
/// Returns false when f <= 0 all the way down to lo (no exercise region).
bool bracket_put_root(const std::function<double(double)>& f, double lo, double hi, double x0, double K,
                      double& a, double& b) {
    double step = std::max(1e-3 * K, 5e-3 * x0);
    if (f(x0) > 0.0) {
        a = x0;
        while (a < hi) {
            const double x = std::min(a + step, hi);
            if (f(x) <= 0.0) {
                b = x;
                return true;
            }
            a = x;
            step *= 2.0;
        }
        b = hi;   // f > 0 up to the cap: the boundary sits at the cap
        return true;
    }
    b = x0;
    while (b > lo) {
        const double x = std::max(b - step, lo);
        if (f(x) > 0.0) {
            a = x;
            return true;
        }
        b = x;
        step *= 2.0;
    }
    return false;
}

Eigen::VectorXd uniform_grid(double t0, double T, int M) {
    if (!(T > t0)) throw ValidationError("solver: need t0 < T");
    Eigen::VectorXd g(M + 1);
    for (int i = 0; i <= M; ++i) g[i] = t0 + (T - t0) * i / M;
    g[M] = T;
    return g;
}

}  // namespace

ExerciseBoundary solve_boundary(const TransitionKernel& kernel, const Contract& contract,
                                const SolverConfig& cfg, double terminal, double t0) {
    cfg.validate();
    contract.validate();
    const int M = cfg.steps;
    const double K = contract.strike;
    const bool put = contract.kind == OptionKind::put;
    VolterraSystem sys(kernel, contract, uniform_grid(t0, contract.maturity, M), cfg.rule,
                       cfg.substeps);

    ExerciseBoundary eb;
    eb.rule = cfg.rule;
    eb.substeps = cfg.substeps;
    eb.kind = contract.kind;
    eb.strike = K;
    eb.times = sys.times();
    eb.values.resize(1, M + 1);
    eb.iterations = Eigen::MatrixXi::Zero(1, M + 1);
    eb.residuals = Eigen::MatrixXd::Zero(1, M + 1);
    eb.row_status = {"ok"};

    Eigen::VectorXd b(M + 1);
    b[M] = terminal;
    const double tol = cfg.tolerance_for(K);
    const auto [x_min, x_max] = kernel.conditioning_range();
    const double lo_put = std::max(1e-6 * K, x_min * (1.0 + 1e-9));
    const double hi_call_cap = std::min(1e3 * K, x_max * (1.0 - 1e-9));

    for (int i = M - 1; i >= 0; --i) {
        auto f = [&](double X) { return sys.residual(i, X, b); };
        const double prev = b[i + 1];
        if (put) {
            const double hi = std::min(K, x_max * (1.0 - 1e-9));
            // Residuals are memoised so bracketing and the root search share evaluations;
            // the iteration count is the number of distinct residual evaluations.
            std::vector<std::pair<double, double>> seen;
            auto fm = [&](double X) {
                for (const auto& [x, v] : seen)
                    if (x == X) return v;
                seen.emplace_back(X, f(X));
                return seen.back().second;
            };
            const double x0 = prev > lo_put && prev <= hi ? prev : hi;
            double a = lo_put, bb = hi;
            if (!bracket_put_root(fm, lo_put, hi, x0, K, a, bb)) {
                b[i] = 0.0;
                eb.iterations(0, i) = static_cast<int>(seen.size());
                continue;
            }
            if (fm(bb) > 0.0) {
                b[i] = bb;
                eb.iterations(0, i) = static_cast<int>(seen.size());
                eb.residuals(0, i) = fm(bb);
                continue;
            }
            const NodeRoot root = find_boundary_root_bracketed(fm, a, fm(a), bb, fm(bb), tol, cfg.max_iterations, i);
            b[i] = root.x;
            eb.iterations(0, i) = static_cast<int>(seen.size());
            eb.residuals(0, i) = root.residual;
        } else {
            const double lo = std::max(K, x_min * (1.0 + 1e-9));
            double hi = std::isfinite(prev) ? std::min(2.0 * prev, hi_call_cap) : std::min(2.0 * K, hi_call_cap);
            while (f(hi) <= 0.0 && hi < hi_call_cap) hi = std::min(2.0 * hi, hi_call_cap);
            if (f(hi) <= 0.0) {
                b[i] = kInf;
                continue;
            }
            const double guess = std::isfinite(prev) ? std::clamp(prev, lo, hi) : 0.5 * (lo + hi);
            const NodeRoot root = find_boundary_root(f, lo, hi, guess, tol, cfg.max_iterations, -1.0, i);
            b[i] = root.x;
            eb.iterations(0, i) = root.iterations;
            eb.residuals(0, i) = root.residual;
        }
    }
    eb.values.row(0) = b.transpose();
    if (h_sign_changes(sys, b) > 1)
        eb.diagnostics.push_back("H changes sign more than once along the boundary");
    if (put && (b.array() <= 0.0).all())
        eb.diagnostics.push_back("early exercise never optimal: boundary pinned at 0");
    return eb;
}

ExerciseBoundary solve_boundary_density(const ModelSpec& m, const Contract& contract,
                                        const SolverConfig& cfg, double t0) {
    if (!std::holds_alternative<ArithmeticOU>(m) && !std::holds_alternative<BlackScholesTD>(m))
        throw ValidationError("solve_boundary_density: model " + model_name(m) +
                              " has no closed-form density");
    const auto kernel = make_kernel(m);
    return solve_boundary(*kernel, contract, cfg,
                          terminal_boundary(rate_curve(m), dividend_curve(m), contract), t0);
}

namespace {

void check_cos_model(const ModelSpec& m, const Contract& contract, const CosConfig& cos) {
    if (std::holds_alternative<NIG>(m))
        throw ValidationError("solve_boundary_cos: jump models use solve_boundary_jump");
    cos.validate();
    const double lk = std::log(contract.strike);
    if (lk <= cos.a || lk >= cos.b) throw RangeError("solve_boundary_cos: log K outside [a, b]");
}

}  // namespace

ExerciseBoundary solve_boundary_cos(const ModelSpec& m, const Contract& contract,
                                    const SolverConfig& cfg, const CosConfig& cos, double v,
                                    double t0) {
    check_cos_model(m, contract, cos);
    const auto kernel = make_kernel(m, cos, v);
    return solve_boundary(*kernel, contract, cfg,
                          terminal_boundary(rate_curve(m), dividend_curve(m), contract), t0);
}

ExerciseBoundary solve_boundary_family(const ModelSpec& m, const Contract& contract,
                                       const SolverConfig& cfg, const CosConfig& cos,
                                       const std::vector<double>& v_grid, int threads, double t0) {
    check_cos_model(m, contract, cos);
    cfg.validate();
    if (v_grid.empty()) throw ValidationError("solve_boundary_family: empty variance grid");
    for (double v : v_grid)
        if (!(v > 0.0)) throw ValidationError("solve_boundary_family: variances must be positive");
    const auto rows = static_cast<Eigen::Index>(v_grid.size());
    const int M = cfg.steps;
    const double terminal = terminal_boundary(rate_curve(m), dividend_curve(m), contract);

    ExerciseBoundary eb;
    eb.rule = cfg.rule;
    eb.substeps = cfg.substeps;
    eb.kind = contract.kind;
    eb.strike = contract.strike;
    eb.times = uniform_grid(t0, contract.maturity, M);
    eb.variance_axis = Eigen::Map<const Eigen::VectorXd>(v_grid.data(), rows);
    eb.values = Eigen::MatrixXd::Constant(rows, M + 1, std::numeric_limits<double>::quiet_NaN());
    eb.iterations = Eigen::MatrixXi::Zero(rows, M + 1);
    eb.residuals = Eigen::MatrixXd::Zero(rows, M + 1);
    eb.row_status.assign(rows, "ok");
    std::vector<std::vector<std::string>> diags(rows);

    std::atomic<Eigen::Index> next{0};
    auto worker = [&] {
        for (Eigen::Index r = next++; r < rows; r = next++) {
            try {
                CosKernel kernel(m, cos, v_grid[r]);
                const ExerciseBoundary one = solve_boundary(kernel, contract, cfg, terminal, t0);
                eb.values.row(r) = one.values.row(0);
                eb.iterations.row(r) = one.iterations.row(0);
                eb.residuals.row(r) = one.residuals.row(0);
                diags[r] = one.diagnostics;
            } catch (const Error& e) {
                eb.row_status[r] = e.what();
            }
        }
    };
    const int n = std::clamp(threads, 1, static_cast<int>(rows));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (Eigen::Index r = 0; r < rows; ++r)
        for (const auto& d : diags[r]) {
            std::ostringstream os;
            os << "v=" << v_grid[r] << ": " << d;
            eb.diagnostics.push_back(os.str());
        }
    return eb;
}

double put_call_boundary_symmetry_check(const ExerciseBoundary& put, const ExerciseBoundary& call,
                                        double K) {
    if (put.times.size() != call.times.size() || put.rows() != call.rows())
        throw ShapeError("symmetry check: boundaries on different grids");
    if ((put.times - call.times).cwiseAbs().maxCoeff() > 1e-12)
        throw ShapeError("symmetry check: time grids differ");
    double worst = 0.0;
    for (Eigen::Index r = 0; r < put.rows(); ++r)
        for (Eigen::Index j = 0; j < put.times.size(); ++j) {
            const double p = put.values(r, j), c = call.values(r, j);
            if (!std::isfinite(p) || !std::isfinite(c) || p <= 0.0) continue;
            worst = std::max(worst, std::abs(p * c - K * K));
        }
    return worst;
}

}  // namespace eeb

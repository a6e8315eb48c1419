#include "eeb/jump.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "eeb/errors.hpp"
#include "eeb/kernel.hpp"
#include "eeb/quadrature.hpp"

namespace eeb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_nig(const NIG& m) { validate(ModelSpec{m}); }

/// int_lo^inf f on panels that double in width once past 0.25; stops after `settle`
/// when a panel adds less than rel_tol of the running total.
template <class F>
double tail_integral(F&& f, double lo, double settle, double abs_tol, double rel_tol = 1e-14) {
    double total = 0.0;
    double y = lo;
    for (int panel = 0; panel < 400; ++panel) {
        const double width = std::max(y, 0.25);
        const double next = y + width;
        const double crude = integrate(f, y, next, 0.0, 0).value;
        const double v = integrate(f, y, next, std::max(abs_tol, 1e-14 * std::abs(crude)), 30).value;
        total += v;
        y = next;
        if (y >= settle && std::abs(v) <= rel_tol * std::abs(total)) return total;
        if (y > 200.0) return total;
    }
    throw ConvergenceError("tail_integral: Levy tail did not settle", total, abs_tol);
}

double omega_drift(const NIG& m, double u, double x, double K) { return m.r(u) * K - m.q(u) * x; }

}  // namespace

LevyTail nig_levy_tail(const NIG& m, double y0) {
    check_nig(m);
    if (!(y0 > 0.0)) throw DomainError("nig_levy_tail: lower limit must be positive");
    LevyTail t;
    const double scale = nig_levy_density(m, y0) * y0;
    t.i0 = tail_integral([&](double y) { return nig_levy_density(m, y); }, y0, y0 + 1.0, 1e-13 * scale);
    t.i1 = tail_integral([&](double y) { return std::exp(y) * nig_levy_density(m, y); }, y0, y0 + 1.0,
                         1e-13 * scale * std::exp(y0));
    return t;
}

double omega_direct(const NIG& m, double u, double x, double xb, double K, const EuropeanPutFn& put) {
    check_nig(m);
    if (x < 0.0 || xb < 0.0) throw DomainError("omega_direct: prices must be non-negative");
    if (x == 0.0) return m.r(u) * K;
    if (x > xb * (1.0 + 1e-12)) throw DomainError("omega_direct: x must lie at or below the boundary");
    const double y_lo = std::max(std::log(xb / x), 0.0);
    const double y_k = std::log(K / x);
    // P_E carries the resolution error of the pricing method; differences below `floor`
    // are treated as zero so that noise next to the cut cannot meet the 1/y^2 singularity.
    const double floor = 1e-9 * K;
    auto raw = [&](double y) {
        const double s = x * std::exp(y);
        return put(s) - K + s;
    };
    if (y_lo == 0.0 && raw(0.0) > floor) return kInf;
    auto g = [&](double y) { return std::max(raw(y) - floor, 0.0) * nig_levy_density(m, y); };
    const double tol = 1e-10 * K;
    double jump = 0.0;
    double start = std::max(y_lo, 1e-12);
    if (y_k > start) {
        jump += integrate(g, start, y_k, tol, 30).value;
        start = y_k;
    }
    jump += tail_integral(g, start, start + 1.0, tol);
    return omega_drift(m, u, x, K) + jump;
}

double terminal_jump_residual(const NIG& m, double K, double T, double b) {
    if (!(b > 0.0 && b < K)) throw DomainError("terminal_jump_residual: need 0 < b < K");
    const LevyTail t = nig_levy_tail(m, std::log(K / b));
    return m.r(T) * K - m.q(T) * b - K * t.i0 + b * t.i1;
}

double terminal_boundary_jump(const NIG& m, double K, double T) {
    check_nig(m);
    if (!(K > 0.0)) throw ValidationError("terminal_boundary_jump: strike must be positive");
    const double lo = 1e-6 * K, hi = K * (1.0 - 1e-9);
    auto F = [&](double b) { return terminal_jump_residual(m, K, T, b); };
    double x0 = lo, f0 = F(lo);
    if (f0 <= 0.0) return 0.0;
    constexpr int kScan = 400;
    for (int s = 1; s <= kScan; ++s) {
        const double x1 = lo * std::pow(hi / lo, static_cast<double>(s) / kScan);
        const double f1 = F(x1);
        if (f1 <= 0.0) {
            double a = x0, b = x1;
            for (int it = 0; it < 200 && b - a > 1e-13 * K; ++it) {
                const double c = 0.5 * (a + b);
                (F(c) > 0.0 ? a : b) = c;
            }
            return 0.5 * (a + b);
        }
        x0 = x1;
    }
    return K;
}

double nig_short_time_mass_below(const NIG& m, double t) {
    const double psi = nig_char_exponent(m, cplx(0.0, -1.0)).real();
    const double c = m.r(t) - m.q(t) - psi;
    return 0.5 - std::atan(c / m.delta) / M_PI;
}

ExerciseBoundary solve_boundary_jump(const NIG& m, const Contract& contract, const SolverConfig& cfg,
                                     const CosConfig& cos, const JumpSolverOptions& opt) {
    check_nig(m);
    cfg.validate();
    contract.validate();
    cos.validate();
    if (contract.kind != OptionKind::put) throw ValidationError("solve_boundary_jump: puts only");
    if (cfg.substeps != 1) throw ValidationError("solve_boundary_jump: substeps must be 1");
    if (opt.table_points < 3) throw ValidationError("solve_boundary_jump: table_points must be >= 3");
    if (opt.threads < 1) throw ValidationError("solve_boundary_jump: threads must be >= 1");

    const int M = cfg.steps;
    const double K = contract.strike, T = contract.maturity;
    const CosKernel kernel(ModelSpec{m}, cos, 0.0);
    const double s_lo = std::exp(cos.a), s_hi = std::exp(cos.b);
    if (!(K > s_lo && K < s_hi)) throw RangeError("solve_boundary_jump: strike outside the COS range");

    Eigen::VectorXd times(M + 1);
    for (int i = 0; i <= M; ++i) times[i] = T * i / M;
    times[M] = T;

    auto european = [&](double u, double s) {
        if (u >= T) return std::max(K - s, 0.0);
        if (s >= s_hi) return 0.0;
        const double D = discount_factor(m.r, u, T);
        if (s <= s_lo) return D * K - s * discount_factor(m.q, u, T);
        const Moments mo = kernel.moments(u, T, s, 0.0, K).value;
        return D * (K * mo.m0 - mo.m1);
    };

    const int P = opt.table_points;
    const int N = cos.n;
    const double width = cos.width();

    // G_k = int (Omega table, linear in X) cos(w_k (z - a)) dz over [a, log X_B(u_j)].
    auto table_coefficients = [&](int j, double xb) {
        const double u = times[j];
        std::vector<double> X(P), O(P);
        for (int p = 0; p < P; ++p) X[p] = xb * p / (P - 1);
        std::atomic<int> next{0};
        std::vector<std::string> errors(opt.threads);
        auto work = [&](int w) {
            try {
                for (int p = next++; p < P; p = next++) {
                    const EuropeanPutFn put = [&](double s) { return european(u, s); };
                    double v = omega_direct(m, u, X[p], xb, K, put);
                    if (!std::isfinite(v) && p > 0) {
                        const double xm = 0.5 * (X[p - 1] + X[p]);
                        v = omega_direct(m, u, xm, xb, K, put);
                    }
                    O[p] = v;
                }
            } catch (const std::exception& e) {
                errors[w] = e.what();
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < opt.threads; ++w) pool.emplace_back(work, w);
        work(0);
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (!e.empty()) throw NumericalError("solve_boundary_jump: Omega table at node " +
                                                 std::to_string(j) + ": " + e);
        Eigen::VectorXd G = Eigen::VectorXd::Zero(N);
        for (int p = 0; p + 1 < P; ++p) {
            if (!std::isfinite(O[p + 1])) throw NumericalError("solve_boundary_jump: non-finite Omega");
            const double zl = X[p] > s_lo ? std::log(X[p]) : cos.a;
            const double zu = std::min(std::log(X[p + 1]), cos.b);
            if (!(zu > zl)) continue;
            const double slope = (O[p + 1] - O[p]) / (X[p + 1] - X[p]);
            const double icpt = O[p] - slope * X[p];
            for (int k = 0; k < N; ++k) {
                const double w = cos.omega(k);
                G[k] += icpt * cos_psi(w, cos.a, zl, zu) + slope * cos_chi(w, cos.a, zl, zu);
            }
        }
        return G;
    };

    // E[Omega(u_j, X_u) 1{X_u <= X_B(u_j)} | X_t = x]
    auto expectation = [&](double t, double u, double x, const Eigen::VectorXd& G) {
        const Eigen::VectorXcd& phi = kernel.cache().get(t, u, 0.0);
        const double z = std::log(x);
        double s = 0.0;
        for (int k = 0; k < N; ++k) {
            const double w = cos.omega(k);
            const double f = (phi[k] * std::exp(cplx(0.0, w * (z - cos.a)))).real() * G[k];
            s += k == 0 ? 0.5 * f : f;
        }
        return 2.0 / width * s;
    };

    ExerciseBoundary eb;
    eb.kind = OptionKind::put;
    eb.strike = K;
    eb.times = times;
    eb.rule = cfg.rule;
    eb.values.resize(1, M + 1);
    eb.iterations = Eigen::MatrixXi::Zero(1, M + 1);
    eb.residuals = Eigen::MatrixXd::Zero(1, M + 1);
    eb.row_status = {"ok"};

    Eigen::VectorXd b(M + 1);
    b[M] = terminal_boundary_jump(m, K, T);
    std::vector<Eigen::VectorXd> G(M + 1);
    std::vector<bool> active(M + 1, false);
    auto add_table = [&](int j) {
        active[j] = b[j] > 0.0;
        if (active[j]) G[j] = table_coefficients(j, b[j]);
    };
    add_table(M);

    const double tol = cfg.tolerance_for(K);
    const double flat = opt.flat_tolerance * K;
    const double lo = std::max(1e-6 * K, s_lo * (1.0 + 1e-9));
    for (int i = M - 1; i >= 0; --i) {
        const double t = times[i];
        const Eigen::VectorXd w = quadrature_weights(times.tail(M + 1 - i), cfg.rule);
        auto f = [&](double X) {
            double v = std::max(K - X, 0.0) - european(t, X);
            for (int j = i + 1; j <= M; ++j)
                if (active[j]) v -= w[j - i] * discount_factor(m.r, t, times[j]) * expectation(t, times[j], X, G[j]);
            const EuropeanPutFn put = [&](double s) { return european(t, s); };
            const double om = omega_direct(m, t, X, X, K, put);
            if (!std::isfinite(om)) return -K;
            return v - w[0] * nig_short_time_mass_below(m, t) * std::max(om, 0.0);
        };
        const double hi = std::min(K, s_hi) * (1.0 - 1e-9);
        if (f(lo) <= 0.0) {
            b[i] = 0.0;
            continue;
        }
        // The residual is nearly flat inside the exercise region, so bracket outwards from
        // the previous node: this selects the upper edge of that region. Below `flat` the
        // residual is within the resolution of the transition moments.
        const double prev = b[i + 1];
        double a = lo, c = hi;
        if (prev > lo && prev <= hi) {
            double step = 0.01 * prev;
            if (f(prev) > 0.0) {
                a = prev;
                for (double x = prev + step; x < hi; step *= 2.0, x = prev + step) {
                    if (f(x) <= 0.0) {
                        c = x;
                        break;
                    }
                    a = x;
                }
            } else {
                c = prev;
                for (double x = prev - step; x > lo; step *= 2.0, x = prev - step) {
                    if (f(x) > -flat) {
                        a = x;
                        break;
                    }
                    c = x;
                }
            }
        }
        const NodeRoot root = find_boundary_root(f, a, c, 0.5 * (a + c), tol, cfg.max_iterations, 1.0, i);
        b[i] = root.x;
        eb.iterations(0, i) = root.iterations;
        eb.residuals(0, i) = root.residual;
        if (i > 0) add_table(i);
    }
    eb.values.row(0) = b.transpose();
    if ((b.array() <= 0.0).all()) eb.diagnostics.push_back("early exercise never optimal: boundary pinned at 0");
    return eb;
}

PadeCoefficients nig_pade_coefficients(double alpha, double beta) {
    if (!(alpha > 0.0 && std::abs(beta) <= alpha))
        throw ValidationError("nig_pade_coefficients: need 0 <= |beta| <= alpha");
    const double a2 = alpha * alpha, b2 = beta * beta;
    const double a4 = a2 * a2, root = std::sqrt(a2 - b2);
    PadeCoefficients c;
    c.a1 = 4.0 * root * (a4 * beta - 3.0 * a2 * b2 * beta + 2.0 * b2 * b2 * beta);
    c.a2 = 2.0 * root * (a4 - 3.0 * a2 * b2 + 4.0 * b2 * b2);
    c.b1 = -2.0 * beta * (a4 - 5.0 * a2 * b2 + 4.0 * b2 * b2);
    c.b2 = 4.0 * (a2 - 2.0 * b2) * (a2 - b2) * (a2 - b2) - a4;
    return c;
}

PadeOperator make_pade_operator(const NIG& m, double K) {
    check_nig(m);
    if (!(K > 0.0)) throw ValidationError("make_pade_operator: strike must be positive");
    PadeOperator op;
    op.c = nig_pade_coefficients(m.alpha, m.beta);
    op.delta = m.delta;
    op.strike = K;
    const PadeCoefficients& c = op.c;
    if (c.b1 + c.b2 == 0.0) throw NumericalError("make_pade_operator: b1 + b2 = 0");
    if (c.b2 == 0.0) throw NumericalError("make_pade_operator: b2 = 0");
    const double ratio = c.b1 / c.b2;
    if (ratio < 0.0) {
        const double slope = (c.a1 + c.a2) / (c.b1 + c.b2);
        op.C1 = -m.delta * slope * ratio * std::pow(K, (c.b1 + c.b2) / c.b2);
    }
    return op;
}

double nig_pade_apply(const PadeOperator& op, double K, double x) {
    if (!(x > 0.0 && K > 0.0)) throw DomainError("nig_pade_apply: prices must be positive");
    const PadeCoefficients& c = op.c;
    if (c.b1 == 0.0) return op.delta * c.a2 / c.b2 * (K - x);
    if (c.b1 + c.b2 == 0.0) throw NumericalError("nig_pade_apply: b1 + b2 = 0");
    const double e = -c.b1 / c.b2;
    double a = op.delta * (c.a1 + c.a2) / (c.b1 + c.b2) * (K - x);
    if (op.C1 != 0.0) a += op.C1 * (c.b2 / c.b1) * (std::pow(K, e) - std::pow(x, e));
    return a;
}

double omega_pseudo(const NIG& m, double u, double x, const PadeOperator& op) {
    return omega_drift(m, u, x, op.strike) + nig_pade_apply(op, op.strike, x);
}

double nig_operator_exact(const NIG& m, double x) {
    return -x * nig_char_exponent(m, cplx(0.0, -1.0)).real();
}

}  // namespace eeb

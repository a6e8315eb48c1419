#include "eeb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "eeb/errors.hpp"

namespace eeb {

void Lattice1D::validate() const {
    if (space_nodes < 5) throw ValidationError("lattice: need at least 5 space nodes");
    if (time_steps < 1) throw ValidationError("lattice: need at least one time step");
    if (theta < 0.5 || theta > 1.0) throw ValidationError("lattice: theta must be in [0.5, 1]");
    if (relaxation <= 0.0 || relaxation >= 2.0) throw ValidationError("lattice: relaxation in (0, 2)");
    if (!(tolerance > 0.0)) throw ValidationError("lattice: PSOR tolerance must be positive");
    if (rannacher_steps < 0 || rannacher_steps > time_steps)
        throw ValidationError("lattice: rannacher_steps out of range");
}

double LatticeSolution::price(double x) const {
    const Eigen::Index n = grid.size();
    if (x <= grid[0]) return values[0];
    if (x >= grid[n - 1]) return values[n - 1];
    const auto it = std::upper_bound(grid.data(), grid.data() + n, x);
    const Eigen::Index j = std::distance(grid.data(), it);
    const double w = (x - grid[j - 1]) / (grid[j] - grid[j - 1]);
    return values[j - 1] + w * (values[j] - values[j - 1]);
}

double LatticeSolution::boundary_at(double t) const {
    const Eigen::Index n = times.size();
    if (t <= times[0]) return boundary[0];
    if (t >= times[n - 1]) return boundary[n - 1];
    const auto it = std::upper_bound(times.data(), times.data() + n, t);
    const Eigen::Index j = std::distance(times.data(), it);
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return boundary[j - 1] + w * (boundary[j] - boundary[j - 1]);
}

namespace {

/// Midpoint-rule integral of f over [a, b] with n panels.
template <class F>
double midpoint(F f, double a, double b, int n = 4000) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * h);
    return s * h;
}

struct Coefficients {
    double r, q, sigma;
};

Coefficients coefficients(const LatticeModel& m, double t) {
    return std::visit([t](const auto& mm) { return Coefficients{mm.r(t), mm.q(t), mm.sigma(t)}; }, m);
}

}  // namespace

LatticeSolution psor_american_put(const LatticeModel& model, const Contract& contract,
                                  const Lattice1D& lat, bool american) {
    lat.validate();
    contract.validate();
    if (contract.kind != OptionKind::put) throw ValidationError("psor: put contracts only");
    const bool log_grid = std::holds_alternative<BlackScholesTD>(model);
    const double K = contract.strike, T = contract.maturity;
    const int N = lat.space_nodes, steps = lat.time_steps;
    auto sig2 = [&](double t) {
        const double s = coefficients(model, t).sigma;
        return s * s;
    };
    const double sd = std::sqrt(midpoint(sig2, 0.0, T));

    LatticeSolution sol;
    Eigen::VectorXd y(N);  // grid coordinate: log price or price
    double lo, hi;
    if (log_grid) {
        const double half = std::max(lat.span_sd * sd, 0.5);
        lo = std::log(K) - half;
        hi = std::log(K) + half;
    } else {
        lo = 0.0;
        hi = K + lat.span_sd * std::max(sd, 0.01 * K);
    }
    const double h = (hi - lo) / (N - 1);
    for (int i = 0; i < N; ++i) y[i] = lo + i * h;
    sol.grid = log_grid ? Eigen::VectorXd(y.array().exp()) : y;
    const Eigen::VectorXd& X = sol.grid;
    const Eigen::VectorXd payoff = (K - X.array()).max(0.0);

    // Operator L(t) V_i = a V_{i-1} + b V_i + c V_{i+1} - the PDE's spatial part minus r V.
    auto stencil = [&](double t, Eigen::VectorXd& a, Eigen::VectorXd& b, Eigen::VectorXd& c) {
        const Coefficients k = coefficients(model, t);
        for (int i = 0; i < N; ++i) {
            const double diff = 0.5 * k.sigma * k.sigma / (h * h);
            const double drift = (log_grid ? k.r - k.q - 0.5 * k.sigma * k.sigma : (k.r - k.q) * X[i]) / (2 * h);
            a[i] = diff - drift;
            b[i] = -2 * diff - k.r;
            c[i] = diff + drift;
        }
    };
    // Dirichlet values at the grid ends at time t.
    auto lower_bc = [&](double t) {
        if (american) return payoff[0];
        const double D = std::exp(-midpoint([&](double s) { return coefficients(model, s).r; }, t, T, 200));
        if (log_grid) {
            const double Dq = std::exp(-midpoint([&](double s) { return coefficients(model, s).q; }, t, T, 200));
            return K * D - X[0] * Dq;
        }
        // Bachelier put at x = 0 with the integrated variance (drift vanishes at 0).
        const double v = midpoint([&](double s) {
            const double g = std::exp(midpoint([&](double w) {
                const Coefficients k = coefficients(model, w);
                return 2 * (k.r - k.q);
            }, s, T, 50));
            return sig2(s) * g;
        }, t, T, 400);
        const double s = std::sqrt(std::max(v, 1e-300)), d = K / s;
        return D * (K * 0.5 * std::erfc(-d / std::sqrt(2.0)) + s * std::exp(-0.5 * d * d) / std::sqrt(2 * M_PI));
    };

    Eigen::VectorXd V = payoff, rhs(N), a0(N), b0(N), c0(N), a1(N), b1(N), c1(N);
    sol.times.resize(steps + 1);
    sol.boundary.resize(steps + 1);
    auto extract = [&](int n) {
        Eigen::Index first = N - 1;
        for (Eigen::Index i = 0; i < N; ++i)
            if (V[i] - (K - X[i]) > 1e-8) {
                first = i;
                break;
            }
        sol.boundary[n] = X[std::max<Eigen::Index>(first - 1, 0)];
    };
    const double dt_full = T / steps;
    for (int n = 0; n <= steps; ++n) sol.times[n] = n * dt_full;
    sol.times[steps] = T;
    extract(steps);

    // One theta-scheme step from t1 down to t0.
    auto step = [&](double t1, double t0, double theta) {
        const double dt = t1 - t0;
        stencil(t1, a1, b1, c1);
        stencil(t0, a0, b0, c0);
        for (int i = 1; i < N - 1; ++i)
            rhs[i] = V[i] + (1 - theta) * dt * (a1[i] * V[i - 1] + b1[i] * V[i] + c1[i] * V[i + 1]);
        V[0] = lower_bc(t0);
        V[N - 1] = 0.0;
        int sweeps = 0;
        while (true) {
            double change = 0.0;
            for (int i = 1; i < N - 1; ++i) {
                const double l = -theta * dt * a0[i], d = 1 - theta * dt * b0[i], u = -theta * dt * c0[i];
                const double gs = (rhs[i] - l * V[i - 1] - u * V[i + 1]) / d;
                double v = V[i] + lat.relaxation * (gs - V[i]);
                if (american) v = std::max(v, payoff[i]);
                change = std::max(change, std::abs(v - V[i]));
                V[i] = v;
            }
            ++sweeps;
            if (change < lat.tolerance) break;
            if (sweeps >= lat.max_sweeps) {
                std::ostringstream os;
                os << "psor: no convergence at t=" << t0 << " (last update " << change << ")";
                throw ConvergenceError(os.str(), change, lat.tolerance);
            }
        }
        sol.max_sweeps_used = std::max(sol.max_sweeps_used, sweeps);
    };

    for (int n = steps - 1; n >= 0; --n) {
        const double t1 = sol.times[n + 1], t0 = sol.times[n];
        if (steps - 1 - n < lat.rannacher_steps) {
            const double tm = 0.5 * (t0 + t1);
            step(t1, tm, 1.0);
            step(tm, t0, 1.0);
        } else {
            step(t1, t0, lat.theta);
        }
        extract(n);
    }
    sol.values = V;
    return sol;
}

double binomial_american(const Contract& contract, double spot, double r, double q, double sigma,
                         int steps, bool american) {
    contract.validate();
    if (steps < 1) throw ValidationError("binomial: need at least one step");
    if (!(sigma > 0.0)) throw ValidationError("binomial: sigma must be positive");
    const double dt = contract.maturity / steps, K = contract.strike;
    const double up = std::exp(sigma * std::sqrt(dt)), dn = 1.0 / up;
    const double p = (std::exp((r - q) * dt) - dn) / (up - dn);
    const double disc = std::exp(-r * dt);
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("binomial: risk-neutral probability outside (0, 1)");
    const bool put = contract.kind == OptionKind::put;
    auto intrinsic = [&](double s) { return put ? std::max(K - s, 0.0) : std::max(s - K, 0.0); };
    std::vector<double> v(steps + 1);
    for (int j = 0; j <= steps; ++j) v[j] = intrinsic(spot * std::pow(up, 2.0 * j - steps));
    for (int n = steps - 1; n >= 0; --n)
        for (int j = 0; j <= n; ++j) {
            const double cont = disc * (p * v[j + 1] + (1 - p) * v[j]);
            v[j] = american ? std::max(cont, intrinsic(spot * std::pow(up, 2.0 * j - n))) : cont;
        }
    return v[0];
}

McMoments mc_density_moments(const ArithmeticOU& m, double t, double u, double x, std::int64_t paths,
                             double dt, const std::vector<double>& thresholds, std::uint64_t seed,
                             int shards, int threads) {
    if (paths < 1) throw ValidationError("mc: need at least one path");
    if (!(u >= t)) throw ValidationError("mc: need u >= t");
    if (!(dt > 0.0)) throw ValidationError("mc: dt must be positive");
    shards = std::max(shards, 1);
    const int steps = std::max(1, static_cast<int>(std::ceil((u - t) / dt - 1e-9)));
    const double h = (u - t) / steps;
    // Per-step drift rate at the midpoint and exact noise variance of the step.
    std::vector<double> drift(steps), noise(steps);
    for (int k = 0; k < steps; ++k) {
        const double a = t + k * h, mid = a + 0.5 * h;
        drift[k] = m.r(mid) - m.q(mid);
        noise[k] = std::sqrt(midpoint([&](double s) { return m.sigma(s) * m.sigma(s); }, a, a + h, 64));
    }
    const std::size_t nt = thresholds.size();
    struct Acc {
        double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
        std::vector<double> i0, i0sq, i1, i1sq;
        std::int64_t n = 0;
    };
    std::vector<Acc> acc(shards);
    auto run = [&](int shard) {
        Acc& A = acc[shard];
        A.i0.assign(nt, 0.0);
        A.i0sq.assign(nt, 0.0);
        A.i1.assign(nt, 0.0);
        A.i1sq.assign(nt, 0.0);
        std::seed_seq seq{seed, static_cast<std::uint64_t>(shard), std::uint64_t{0x9e3779b97f4a7c15ull}};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> z;
        const std::int64_t n = paths / shards + (shard < paths % shards ? 1 : 0);
        for (std::int64_t p = 0; p < n; ++p) {
            double X = x;
            for (int k = 0; k < steps; ++k) X += drift[k] * X * h + noise[k] * z(rng);
            const double d = X - x;
            A.s1 += d;
            A.s2 += d * d;
            A.s3 += d * d * d;
            A.s4 += d * d * d * d;
            for (std::size_t j = 0; j < nt; ++j)
                if (X >= 0.0 && X <= thresholds[j]) {
                    A.i0[j] += 1.0;
                    A.i0sq[j] += 1.0;
                    A.i1[j] += X;
                    A.i1sq[j] += X * X;
                }
        }
        A.n = n;
    };
    const int nthreads = std::clamp(threads, 1, shards);
    for (int base = 0; base < shards; base += nthreads) {
        std::vector<std::thread> pool;
        for (int s = base + 1; s < std::min(base + nthreads, shards); ++s) pool.emplace_back(run, s);
        run(base);
        for (auto& th : pool) th.join();
    }
    McMoments out;
    out.thresholds = thresholds;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    std::vector<double> i0(nt, 0.0), i0sq(nt, 0.0), i1(nt, 0.0), i1sq(nt, 0.0);
    std::int64_t n = 0;
    for (const Acc& A : acc) {  // fixed shard order keeps results thread-count independent
        s1 += A.s1;
        s2 += A.s2;
        s3 += A.s3;
        s4 += A.s4;
        n += A.n;
        for (std::size_t j = 0; j < nt; ++j) {
            i0[j] += A.i0[j];
            i0sq[j] += A.i0sq[j];
            i1[j] += A.i1[j];
            i1sq[j] += A.i1sq[j];
        }
    }
    const double N = static_cast<double>(n);
    const double md = s1 / N;
    const double var = std::max(s2 / N - md * md, 0.0);
    const double m4 = s4 / N - 4 * md * s3 / N + 6 * md * md * s2 / N - 3 * md * md * md * md;
    out.mean = x + md;
    out.mean_se = std::sqrt(var / N);
    out.variance = var * N / (N - 1);
    out.variance_se = std::sqrt(std::max(m4 - var * var, 0.0) / N);
    for (std::size_t j = 0; j < nt; ++j) {
        const double p0 = i0[j] / N, p1 = i1[j] / N;
        out.psi1.push_back(p0);
        out.psi1_se.push_back(std::sqrt(std::max(i0sq[j] / N - p0 * p0, 0.0) / N));
        out.psi2.push_back(p1);
        out.psi2_se.push_back(std::sqrt(std::max(i1sq[j] / N - p1 * p1, 0.0) / N));
    }
    return out;
}

}  // namespace eeb

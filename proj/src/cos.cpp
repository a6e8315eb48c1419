#include "eeb/cos.hpp"

#include <cmath>
#include <sstream>

#include "eeb/errors.hpp"

namespace eeb {

namespace {
constexpr cplx I(0.0, 1.0);
}

double CosConfig::omega(int k) const { return k * M_PI / width(); }

void CosConfig::validate() const {
    if (!(b > a)) throw ValidationError("cos: need b > a");
    if (n < 1) throw ValidationError("cos: need N >= 1");
}

Eigen::VectorXcd cf_grid(const CfAtZero& cf, const CosConfig& cfg) {
    cfg.validate();
    Eigen::VectorXcd out(cfg.n);
    for (int k = 0; k < cfg.n; ++k) {
        try {
            out[k] = cf(cfg.omega(k));
        } catch (const Error& e) {
            std::ostringstream os;
            os << "cos: CF evaluation failed at k=" << k << ": " << e.what();
            throw NumericalError(os.str());
        }
    }
    return out;
}

CosCoefficients cos_coefficients(const Eigen::VectorXcd& phi0, double x, const CosConfig& cfg,
                                 int derivative) {
    if (phi0.size() != cfg.n) throw ShapeError("cos_coefficients: CF grid size != N");
    CosCoefficients c;
    c.config = cfg;
    c.x = x;
    c.values.resize(cfg.n);
    const double scale = 2.0 / cfg.width();
    for (int k = 0; k < cfg.n; ++k) {
        const double w = cfg.omega(k);
        cplx z = phi0[k] * std::exp(I * (w * (x - cfg.a)));
        for (int d = 0; d < derivative; ++d) z *= I * w;
        c.values[k] = scale * z.real();
    }
    return c;
}

CosCoefficients cos_coefficients(const CfAtZero& cf, double x, const CosConfig& cfg) {
    return cos_coefficients(cf_grid(cf, cfg), x, cfg);
}

CosCoefficients cos_coefficients_direct(const Eigen::VectorXcd& phi_x, double x, const CosConfig& cfg) {
    if (phi_x.size() != cfg.n) throw ShapeError("cos_coefficients_direct: CF grid size != N");
    CosCoefficients c;
    c.config = cfg;
    c.x = x;
    c.values.resize(cfg.n);
    const double scale = 2.0 / cfg.width();
    for (int k = 0; k < cfg.n; ++k)
        c.values[k] = scale * (phi_x[k] * std::exp(-I * (cfg.omega(k) * cfg.a))).real();
    return c;
}

CosCoefficients cos_coefficients_direct(const CfAtZero& cf_x, double x, const CosConfig& cfg) {
    return cos_coefficients_direct(cf_grid(cf_x, cfg), x, cfg);
}

double density_reconstruct(const CosCoefficients& c, double y) {
    const CosConfig& cfg = c.config;
    if (y < cfg.a || y > cfg.b) throw DomainError("density_reconstruct: y outside [a, b]");
    double s = 0.5 * c.values[0];
    for (int k = 1; k < cfg.n; ++k) s += c.values[k] * std::cos(cfg.omega(k) * (y - cfg.a));
    return s;
}

Cumulants cumulants_from_cf(const CfAtZero& cf) {
    auto g = [&](double w) { return std::log(cf(w)); };
    const double h = 1e-4;
    const cplx gp = g(h), gm = g(-h), g0 = g(0.0);
    Cumulants k;
    k.c1 = (gp - gm).imag() / (2.0 * h);
    k.c2 = -(gp + gm - 2.0 * g0).real() / (h * h);
    if (std::isfinite(k.c2) && k.c2 > 0.0) {
        const double h4 = 0.1 / std::sqrt(k.c2);
        const double d4 =
            (g(2 * h4) - 4.0 * g(h4) + 6.0 * g0 - 4.0 * g(-h4) + g(-2 * h4)).real();
        k.c4 = d4 / std::pow(h4, 4);
    }
    return k;
}

std::pair<double, double> truncation_range(const CfAtZero& cf, const TruncationPolicy& policy) {
    if (policy.kind == TruncationPolicy::Kind::fixed) {
        if (!(policy.b > policy.a)) throw ValidationError("truncation_range: need b > a");
        return {policy.a, policy.b};
    }
    if (!(policy.L > 0.0)) throw ValidationError("truncation_range: need L > 0");
    const Cumulants k = cumulants_from_cf(cf);
    if (!std::isfinite(k.c1) || !std::isfinite(k.c2) || !std::isfinite(k.c4))
        throw RangeError("truncation_range: non-finite cumulants");
    // c2 at the noise floor of the difference quotient (~1e-16 / h^2) means a point mass
    if (!(k.c2 > 1e-7)) throw RangeError("truncation_range: degenerate (zero-variance) CF");
    const double half = policy.L * std::sqrt(k.c2 + std::sqrt(std::abs(k.c4)));
    return {k.c1 - half, k.c1 + half};
}

double cos_chi(double w, double a, double c, double d) {
    if (d <= c) return 0.0;
    auto prim = [&](double y) {
        const double arg = w * (y - a);
        return std::exp(y) * (std::cos(arg) + w * std::sin(arg));
    };
    return (prim(d) - prim(c)) / (1.0 + w * w);
}

double cos_psi(double w, double a, double c, double d) {
    if (d <= c) return 0.0;
    if (w == 0.0) return d - c;
    return (std::sin(w * (d - a)) - std::sin(w * (c - a))) / w;
}

namespace {

template <class G>
double cos_sum(const CosCoefficients& c, G&& g) {
    double s = 0.5 * c.values[0] * g(0);
    for (int k = 1; k < c.config.n; ++k) s += c.values[k] * g(k);
    return s;
}

void check_strike(const CosConfig& cfg, double K) {
    const double lk = std::log(K);
    if (!(lk > cfg.a && lk < cfg.b)) throw RangeError("COS: log K outside the truncation range");
}

}  // namespace

EuropeanResult european_put_cos(const CosCoefficients& c, double K, double discount) {
    const CosConfig& cfg = c.config;
    check_strike(cfg, K);
    const double lk = std::log(K);
    const double raw = discount * cos_sum(c, [&](int k) {
        const double w = cfg.omega(k);
        return K * cos_psi(w, cfg.a, cfg.a, lk) - cos_chi(w, cfg.a, cfg.a, lk);
    });
    return {std::max(raw, 0.0), raw < 0.0};
}

EuropeanResult european_call_cos(const CosCoefficients& c, double K, double discount) {
    const CosConfig& cfg = c.config;
    check_strike(cfg, K);
    const double lk = std::log(K);
    const double raw = discount * cos_sum(c, [&](int k) {
        const double w = cfg.omega(k);
        return cos_chi(w, cfg.a, lk, cfg.b) - K * cos_psi(w, cfg.a, lk, cfg.b);
    });
    return {std::max(raw, 0.0), raw < 0.0};
}

double eep_inner_coefficient(int k, const CosConfig& cfg, double xb, double r, double q, double K) {
    if (xb < 0.0) throw DomainError("eep_inner_coefficient: X_B < 0");
    if (k == 0) return K * r * xb - 0.5 * q * xb * xb;
    const double w = cfg.omega(k), a = cfg.a;
    const double s1 = std::sin(w * (xb - a)), c1 = std::cos(w * (xb - a));
    const double int_cos = (s1 + std::sin(w * a)) / w;
    const double int_xcos = xb * s1 / w + (c1 - std::cos(w * a)) / (w * w);
    return r * K * int_cos - q * int_xcos;
}

double eep_inner_coefficient_log(int k, const CosConfig& cfg, double log_xb, double r, double q,
                                 double K) {
    if (log_xb < cfg.a || log_xb > cfg.b)
        throw DomainError("eep_inner_coefficient_log: x_B outside [a, b]");
    const double w = cfg.omega(k);
    return r * K * cos_psi(w, cfg.a, cfg.a, log_xb) - q * cos_chi(w, cfg.a, cfg.a, log_xb);
}

const Eigen::VectorXcd& CfCache::get(double t, double u, double v) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_tuple(t, u, v);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    Eigen::VectorXcd phi = cf_grid([&](double w) { return cf_(t, u, w, 0.0, v); }, cfg_);
    return map_.emplace(key, std::move(phi)).first->second;
}

Eigen::VectorXcd CfCache::evaluate(double t, double u, double x, double v) const {
    return cf_grid([&](double w) { return cf_(t, u, w, x, v); }, cfg_);
}

std::size_t CfCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
    const Eigen::Index n = grid.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

double eep_from_cf(const CfCache& cache, double t, double x, double v, const Eigen::VectorXd& u_grid,
                   const Eigen::VectorXd& boundary, const Curve& r, const Curve& q, double K,
                   bool use_cache) {
    if (u_grid.size() != boundary.size() || u_grid.size() < 2)
        throw ShapeError("eep_from_cf: boundary/grid mismatch");
    if (std::abs(u_grid[0] - t) > 1e-14) throw ShapeError("eep_from_cf: grid must start at t");
    const CosConfig& cfg = cache.config();
    const Eigen::VectorXd w = trapezoid_weights(u_grid);
    double eep = 0.0;
    for (Eigen::Index j = 1; j < u_grid.size(); ++j) {
        const double u = u_grid[j], xb = boundary[j];
        const double ru = r(u), qu = q(u);
        if (xb <= 0.0 || ru * K - qu * xb <= 0.0) continue;
        const double zb = std::min(std::log(xb), cfg.b);
        if (zb <= cfg.a) continue;
        const CosCoefficients c =
            use_cache ? cos_coefficients(cache.get(t, u, v), x, cfg)
                      : cos_coefficients_direct(cache.evaluate(t, u, x, v), x, cfg);
        double s = 0.0;
        for (int k = 0; k < cfg.n; ++k)
            s += (k == 0 ? 0.5 : 1.0) * c.values[k] * eep_inner_coefficient_log(k, cfg, zb, ru, qu, K);
        eep += w[j] * discount_factor(r, t, u) * s;
    }
    return eep;
}

}  // namespace eeb

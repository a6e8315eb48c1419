#include "eeb/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "eeb/errors.hpp"
#include "eeb/quadrature.hpp"
#include "eeb/specfun.hpp"

namespace eeb {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr cplx I(0.0, 1.0);

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

bool heston_curve_ok(const Curve& c) {
    return c.kind() == Curve::Kind::constant || c.kind() == Curve::Kind::piecewise_constant;
}

}  // namespace

std::string model_name(const ModelSpec& m) {
    return std::visit(overloaded{[](const BlackScholesTD&) { return "black_scholes"; },
                                 [](const ArithmeticOU&) { return "ou"; },
                                 [](const Heston&) { return "heston"; },
                                 [](const ThreeHalves&) { return "three_halves"; },
                                 [](const NIG&) { return "nig"; }},
                      m);
}

void validate(const ModelSpec& m) {
    std::visit(
        overloaded{
            [](const BlackScholesTD& b) {
                require(b.sigma.min_value(0.0, 1e3) >= 0.0, "black_scholes: sigma must be nonnegative");
            },
            [](const ArithmeticOU& o) {
                require(o.sigma.min_value(0.0, 1e3) >= 0.0, "ou: sigma must be nonnegative");
            },
            [](const Heston& h) {
                for (const Curve* c : {&h.kappa, &h.theta, &h.eps, &h.rho})
                    require(heston_curve_ok(*c), "heston: parameters must be constant or piecewise constant");
                require(h.eps.min_value(0.0, 1e3) > 0.0, "heston: eps must be positive");
                require(h.v0 > 0.0, "heston: v0 must be positive");
                require(h.rho.min_value(0.0, 1e3) >= -1.0 && h.rho.max_value(0.0, 1e3) <= 1.0,
                        "heston: rho must lie in [-1, 1]");
            },
            [](const ThreeHalves& s) {
                require(s.eps > 0.0, "three_halves: eps must be positive");
                require(s.v0 > 0.0, "three_halves: v0 must be positive");
                require(std::abs(s.rho) <= 1.0, "three_halves: rho must lie in [-1, 1]");
                require(s.kappa - s.rho * s.eps >= -0.5 * s.eps * s.eps,
                        "three_halves: kappa - rho eps >= -eps^2/2 violated");
            },
            [](const NIG& n) {
                require(n.delta > 0.0, "nig: delta must be positive");
                require(n.alpha > 0.0 && std::abs(n.beta) < n.alpha, "nig: need |beta| < alpha");
                require(n.alpha > std::abs(n.beta + 1.0),
                        "nig: need alpha > |beta + 1| for a finite forward");
            }},
        m);
}

const Curve& rate_curve(const ModelSpec& m) {
    return std::visit([](const auto& x) -> const Curve& { return x.r; }, m);
}

const Curve& dividend_curve(const ModelSpec& m) {
    return std::visit([](const auto& x) -> const Curve& { return x.q; }, m);
}

bool has_characteristic_function(const ModelSpec& m) {
    return !std::holds_alternative<ArithmeticOU>(m);
}

double initial_variance(const ModelSpec& m) {
    if (auto h = std::get_if<Heston>(&m)) return h->v0;
    if (auto s = std::get_if<ThreeHalves>(&m)) return s->v0;
    return 0.0;
}

ModelSpec with_vol_scale(const ModelSpec& m, double s) {
    return std::visit(
        overloaded{[s](BlackScholesTD b) -> ModelSpec {
                       b.sigma = b.sigma.scaled(s);
                       return b;
                   },
                   [s](ArithmeticOU o) -> ModelSpec {
                       o.sigma = o.sigma.scaled(s);
                       return o;
                   },
                   [s](Heston h) -> ModelSpec {
                       h.eps = h.eps.scaled(s);
                       return h;
                   },
                   [s](ThreeHalves t) -> ModelSpec {
                       t.eps *= s;
                       return t;
                   },
                   [s](NIG n) -> ModelSpec {
                       n.delta *= s;
                       return n;
                   }},
        m);
}

cplx cf_black_scholes(const BlackScholesTD& m, double t, double u, cplx w, double x) {
    const double var = m.sigma.integral_of_square(t, u);
    const double drift = integrated_carry(m.r, m.q, t, u) - 0.5 * var;
    return std::exp(I * w * (x + drift) - 0.5 * w * w * var);
}

cplx cf_heston(const Heston& m, double t, double u, cplx w, double x, double v) {
    if (t > u) throw DomainError("cf_heston: t > u");
    // breakpoints of all parameter curves inside (t, u)
    std::vector<double> cuts{u};
    for (const Curve* c : {&m.kappa, &m.theta, &m.eps, &m.rho})
        for (double b : c->breaks())
            if (b > t && b < u) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(t);

    cplx A = 0.0, B = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        const double hi = cuts[j], lo = cuts[j + 1], tau = hi - lo;
        const double mid = 0.5 * (lo + hi);
        const double kappa = m.kappa(mid), theta = m.theta(mid), eps = m.eps(mid), rho = m.rho(mid);
        const double e2 = eps * eps;
        const cplx b = kappa - rho * eps * I * w;
        const cplx d = std::sqrt(b * b + e2 * (I * w + w * w));
        const cplx g = (b - d - e2 * B) / (b + d - e2 * B);
        const cplx E = std::exp(-d * tau);
        const cplx Bn = B + (b - d - e2 * B) / e2 * (1.0 - E) / (1.0 - g * E);
        A += kappa * theta / e2 * ((b - d) * tau - 2.0 * std::log((1.0 - g * E) / (1.0 - g)));
        B = Bn;
        if (!std::isfinite(A.real()) || !std::isfinite(B.real()) || !std::isfinite(A.imag()) ||
            !std::isfinite(B.imag())) {
            std::ostringstream os;
            os << "cf_heston: non-finite Riccati solution on interval " << j;
            throw NumericalError(os.str());
        }
    }
    return std::exp(I * w * (x + integrated_carry(m.r, m.q, t, u)) + A + B * v);
}

cplx cf_three_halves(const ThreeHalves& m, double t, double u, cplx w, double x, double v) {
    if (t > u) throw DomainError("cf_three_halves: t > u");
    if (!(v > 0.0)) throw DomainError("cf_three_halves: v must be positive");
    const double carry = integrated_carry(m.r, m.q, t, u);
    if (t == u || w == 0.0) return std::exp(I * w * (x + carry));
    const double e2 = m.eps * m.eps;
    const cplx kt = m.kappa - I * w * m.rho * m.eps;
    const cplx c = std::sqrt(std::pow(0.5 + kt / e2, 2) + (I * w + w * w) / e2);
    const cplx alpha = -0.5 - kt / e2 + c;
    const cplx beta = 2.0 * (1.0 + alpha + kt / e2);
    const double C = theta_integrals(m.theta, t, u, m.eps).C;
    const double log_cv = std::log(C * v);
    try {
        const cplx lg = log_gamma(beta - alpha) - log_gamma(beta);
        const cplx M = kummer_m(alpha, beta, -std::exp(-log_cv));
        return std::exp(I * w * (x + carry) + lg - alpha * log_cv) * M;
    } catch (const Error& e) {
        std::ostringstream os;
        os << "cf_three_halves(omega=" << w << ", v=" << v << "): " << e.what();
        throw NumericalError(os.str());
    }
}

cplx nig_char_exponent(const NIG& m, cplx w) {
    const double a2 = m.alpha * m.alpha;
    const cplx bw = m.beta + I * w;
    return m.delta * (std::sqrt(a2 - m.beta * m.beta) - std::sqrt(a2 - bw * bw));
}

cplx nig_increment_cf(const NIG& m, double tau, cplx w) {
    return std::exp(tau * nig_char_exponent(m, w) + I * w * m.mu * tau);
}

cplx cf_nig(const NIG& m, double t, double u, cplx w, double x) {
    const double tau = u - t;
    const cplx comp = nig_char_exponent(m, cplx(0.0, -1.0));
    return std::exp(I * w * (x + integrated_carry(m.r, m.q, t, u)) +
                    tau * (nig_char_exponent(m, w) - I * w * comp));
}

double nig_levy_density(const NIG& m, double y) {
    if (y == 0.0) throw DomainError("nig_levy_density: singular at 0");
    const double ay = std::abs(y);
    // exp(beta y) K1(alpha |y|) = exp(beta y - alpha |y|) * scaled K1
    const double expo = m.beta * y - m.alpha * ay;
    return m.alpha * m.delta / M_PI * std::exp(expo) * bessel_k1_scaled(m.alpha * ay) / ay;
}

cplx characteristic_function(const ModelSpec& m, double t, double u, cplx w, double x, double v) {
    return std::visit(
        overloaded{[&](const BlackScholesTD& b) { return cf_black_scholes(b, t, u, w, x); },
                   [&](const ArithmeticOU&) -> cplx {
                       throw ValidationError("ou: no log-price characteristic function");
                   },
                   [&](const Heston& h) { return cf_heston(h, t, u, w, x, v); },
                   [&](const ThreeHalves& s) { return cf_three_halves(s, t, u, w, x, v); },
                   [&](const NIG& n) { return cf_nig(n, t, u, w, x); }},
        m);
}

GaussianLaw ou_transition(const ArithmeticOU& m, double t, double u, double x) {
    if (t > u) throw DomainError("ou_transition: t > u");
    GaussianLaw g;
    g.mean = x * std::exp(integrated_carry(m.r, m.q, t, u));
    if (t == u) return g;
    const bool flat = m.sigma.kind() == Curve::Kind::constant && m.r.kind() == Curve::Kind::constant &&
                      m.q.kind() == Curve::Kind::constant;
    if (flat) {
        const double k = m.r(t) - m.q(t), s = m.sigma(t);
        g.variance = s * s * (k == 0.0 ? (u - t) : std::expm1(2.0 * k * (u - t)) / (2.0 * k));
        return g;
    }
    auto integrand = [&](double s) {
        const double sig = m.sigma(s);
        return sig * sig * std::exp(2.0 * integrated_carry(m.r, m.q, s, u));
    };
    const double scale = m.sigma.integral_of_square(t, u);
    g.variance = integrate(integrand, t, u, 1e-14 * std::max(scale, 1e-300)).value;
    return g;
}

TransitionDensity TransitionDensity::ou(const ArithmeticOU& m, double t, double u, double x) {
    const GaussianLaw g = ou_transition(m, t, u, x);
    if (!(g.variance > 0.0)) throw NumericalError("ou_transition_density: zero variance");
    TransitionDensity d;
    d.loc_ = g.mean;
    d.scale_ = std::sqrt(g.variance);
    return d;
}

TransitionDensity TransitionDensity::black_scholes(const BlackScholesTD& m, double t, double u,
                                                   double x) {
    if (t > u) throw DomainError("black_scholes density: t > u");
    if (x <= 0.0) throw DomainError("black_scholes density: x must be positive");
    const double var = m.sigma.integral_of_square(t, u);
    if (!(var > 0.0)) throw NumericalError("black_scholes density: zero variance");
    TransitionDensity d;
    d.lognormal_ = true;
    d.loc_ = std::log(x) + integrated_carry(m.r, m.q, t, u) - 0.5 * var;
    d.scale_ = std::sqrt(var);
    return d;
}

double TransitionDensity::operator()(double X) const {
    if (lognormal_) {
        if (X <= 0.0) return 0.0;
        return norm_pdf((std::log(X) - loc_) / scale_) / (scale_ * X);
    }
    return norm_pdf((X - loc_) / scale_) / scale_;
}

}  // namespace eeb

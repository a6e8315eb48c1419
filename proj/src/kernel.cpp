#include "eeb/kernel.hpp"

#include <cmath>

#include "eeb/errors.hpp"
#include "eeb/quadrature.hpp"
#include "eeb/specfun.hpp"

namespace eeb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr cplx I(0.0, 1.0);

/// Lower-tail moments int_{-inf}^U {1, X} psi dX and their sensitivities.
struct Tail {
    Moments value, dx, dxx, dt, dscale;
    double density = 0.0;
};

Tail operator-(Tail a, const Tail& b) {
    auto sub = [](Moments& x, const Moments& y) {
        x.m0 -= y.m0;
        x.m1 -= y.m1;
    };
    sub(a.value, b.value);
    sub(a.dx, b.dx);
    sub(a.dxx, b.dxx);
    sub(a.dt, b.dt);
    sub(a.dscale, b.dscale);
    return a;
}

MomentSens to_sens(const Tail& hi, const Tail& lo) {
    const Tail d = hi - lo;
    MomentSens s;
    s.value = d.value;
    s.dx = d.dx;
    s.dxx = d.dxx;
    s.dt = d.dt;
    s.dscale = d.dscale;
    s.density_lo = lo.density;
    s.density_hi = hi.density;
    return s;
}

/// Point mass at X = m (zero elapsed time or zero volatility); dm = dm/dx.
Tail point_tail(double U, double m, double dm, double dm_dt) {
    Tail t;
    if (m <= U) {
        t.value = {1.0, m};
        t.dx.m1 = dm;
        t.dt.m1 = dm_dt;
    }
    return t;
}

/// X ~ N(m, s^2), m = g x.
struct GaussState {
    double m, s, g;
    double m_t, s_t;  // time derivatives of m and s
};

Tail gauss_tail(double U, const GaussState& st) {
    if (U == -kInf) return {};
    if (U == kInf) {
        Tail t;
        t.value = {1.0, st.m};
        t.dx.m1 = st.g;
        t.dt.m1 = st.m_t;
        return t;
    }
    if (st.s <= 0.0) return point_tail(U, st.m, st.g, st.m_t);
    const double s = st.s, g = st.g, m = st.m;
    const double d = (U - m) / s;
    const double Phi = norm_cdf(d), phi = norm_pdf(d);
    Tail t;
    t.value = {Phi, m * Phi - s * phi};
    t.dx = {-phi * g / s, g * (Phi - U / s * phi)};
    t.dxx = {-d * phi * g * g / (s * s), -g * g * phi / s * (1.0 + U * d / s)};
    const double d_t = (-st.m_t - d * st.s_t) / s;
    t.dt = {phi * d_t, st.m_t * Phi - st.s_t * phi + U * phi * d_t};
    t.dscale = {-d * phi, -phi * (s + d * U)};
    t.density = phi / s;
    return t;
}

/// log X ~ N(mu, s^2), forward F = g x.
struct LogState {
    double mu, s, F, g;
    double mu_t, s_t, c_t;  // time derivatives of mu, s and the carry
    double x;
};

Tail lognormal_tail(double U, const LogState& st) {
    if (U <= 0.0) return {};
    if (U == kInf) {
        Tail t;
        t.value = {1.0, st.F};
        t.dx.m1 = st.g;
        t.dt.m1 = st.F * st.c_t;
        return t;
    }
    if (st.s <= 0.0) return point_tail(U, st.F, st.g, st.F * st.c_t);
    const double s = st.s, x = st.x, F = st.F, g = st.g;
    const double d = (std::log(U) - st.mu) / s, e = d - s;
    const double Pd = norm_cdf(d), pd = norm_pdf(d);
    const double Pe = norm_cdf(e), pe = norm_pdf(e);
    Tail t;
    t.value = {Pd, F * Pe};
    t.dx = {-pd / (x * s), g * (Pe - pe / s)};
    t.dxx = {pd / (x * x * s) * (1.0 - d / s), -g * pe / (x * s) * (1.0 + e / s)};
    const double d_t = (-st.mu_t - d * st.s_t) / s;
    const double e_t = d_t - st.s_t;
    t.dt = {pd * d_t, F * st.c_t * Pe + F * pe * e_t};
    t.dscale = {pd * (s - d), -F * pe * d};
    t.density = pd / (U * s);
    return t;
}

}  // namespace

MomentSens GaussianKernel::moments(double t, double u, double x, double lo, double hi,
                                   unsigned) const {
    if (hi <= lo) return {};
    GaussState st{};
    st.g = std::exp(integrated_carry(m_.r, m_.q, t, u));
    st.m = st.g * x;
    st.m_t = -(m_.r(t) - m_.q(t)) * st.m;
    if (u > t) {
        const GaussianLaw law = ou_transition(m_, t, u, x);
        st.s = std::sqrt(law.variance);
        const double sig = m_.sigma(t);
        st.s_t = st.s > 0.0 ? -sig * sig * st.g * st.g / (2.0 * st.s) : 0.0;
    } else {
        st.s = 0.0;
        st.s_t = 0.0;
    }
    return to_sens(gauss_tail(hi, st), gauss_tail(lo, st));
}

MomentSens LognormalKernel::moments(double t, double u, double x, double lo, double hi,
                                    unsigned) const {
    if (hi <= lo) return {};
    if (x <= 0.0) throw DomainError("lognormal kernel: x must be positive");
    LogState st{};
    const double carry = integrated_carry(m_.r, m_.q, t, u);
    st.x = x;
    st.g = std::exp(carry);
    st.F = st.g * x;
    const double var = u > t ? m_.sigma.integral_of_square(t, u) : 0.0;
    st.s = std::sqrt(std::max(var, 0.0));
    st.mu = std::log(x) + carry - 0.5 * var;
    st.c_t = -(m_.r(t) - m_.q(t));
    const double sig = m_.sigma(t);
    st.mu_t = st.c_t + 0.5 * sig * sig;
    st.s_t = st.s > 0.0 ? -sig * sig / (2.0 * st.s) : 0.0;
    return to_sens(lognormal_tail(hi, st), lognormal_tail(lo, st));
}

CosKernel::CosKernel(ModelSpec m, CosConfig cfg, double v)
    : m_(std::move(m)), cfg_(cfg), v_(v) {
    cfg_.validate();
    if (!has_characteristic_function(m_))
        throw ValidationError("cos kernel: model " + model_name(m_) + " has no characteristic function");
    const ModelSpec model = m_;
    base_ = std::make_shared<CfCache>(
        [model](double t, double u, double w, double x, double vv) {
            return characteristic_function(model, t, u, cplx(w, 0.0), x, vv);
        },
        cfg_);
}

Eigen::VectorXcd CosKernel::phi_at(double t, double u, double scale) const {
    const ModelSpec model = scale == 1.0 ? m_ : with_vol_scale(m_, scale);
    Eigen::VectorXcd out(cfg_.n);
    for (int k = 0; k < cfg_.n; ++k)
        out[k] = characteristic_function(model, t, u, cplx(cfg_.omega(k), 0.0), 0.0, v_);
    return out;
}

const CfCache& CosKernel::bumped(int sign) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = sign > 0 ? up_ : down_;
    if (!slot) {
        const ModelSpec model = with_vol_scale(m_, 1.0 + sign * 1e-5);
        slot = std::make_shared<CfCache>(
            [model](double t, double u, double w, double x, double vv) {
                return characteristic_function(model, t, u, cplx(w, 0.0), x, vv);
            },
            cfg_);
    }
    return *slot;
}

namespace {

/// Sum' F_k {psi_k, chi_k} over [zl, zh] for phi0 shifted to z.
struct CosSums {
    Moments value, dz, dzz;
    double f_lo = 0.0, f_hi = 0.0;
};

CosSums cos_sums(const Eigen::VectorXcd& phi0, const CosConfig& cfg, double z, double zl, double zh,
                 bool space) {
    CosSums out;
    const double scale = 2.0 / cfg.width();
    for (int k = 0; k < cfg.n; ++k) {
        const double w = cfg.omega(k);
        const double half = k == 0 ? 0.5 : 1.0;
        const cplx e = phi0[k] * std::exp(I * (w * (z - cfg.a)));
        const double f0 = half * scale * e.real();
        const double ps = cos_psi(w, cfg.a, zl, zh), ch = cos_chi(w, cfg.a, zl, zh);
        out.value.m0 += f0 * ps;
        out.value.m1 += f0 * ch;
        if (!space) continue;
        const double f1 = -half * scale * w * e.imag();
        const double f2 = -w * w * f0;
        out.dz.m0 += f1 * ps;
        out.dz.m1 += f1 * ch;
        out.dzz.m0 += f2 * ps;
        out.dzz.m1 += f2 * ch;
        out.f_lo += f0 * std::cos(w * (zl - cfg.a));
        out.f_hi += f0 * std::cos(w * (zh - cfg.a));
    }
    return out;
}

}  // namespace

MomentSens CosKernel::moments(double t, double u, double x, double lo, double hi,
                              unsigned flags) const {
    if (hi <= lo) return {};
    if (x <= 0.0) throw DomainError("cos kernel: x must be positive");
    if (u <= t) {
        const Tail h = point_tail(hi, x, 1.0, 0.0), l = point_tail(lo, x, 1.0, 0.0);
        return to_sens(h, l);
    }
    const double z = std::log(x);
    if (z <= cfg_.a || z >= cfg_.b) throw RangeError("cos kernel: log x outside [a, b]");
    const double zl = lo <= 0.0 ? cfg_.a : std::clamp(std::log(lo), cfg_.a, cfg_.b);
    const double zh = hi == kInf ? cfg_.b : std::clamp(std::log(hi), cfg_.a, cfg_.b);
    MomentSens s;
    if (zh <= zl) return s;
    const bool space = flags & kSpace;
    const CosSums c = cos_sums(base_->get(t, u, v_), cfg_, z, zl, zh, space);
    s.value = c.value;
    if (space) {
        s.dx = {c.dz.m0 / x, c.dz.m1 / x};
        s.dxx = {(c.dzz.m0 - c.dz.m0) / (x * x), (c.dzz.m1 - c.dz.m1) / (x * x)};
        const double ul = std::exp(zl), uh = std::exp(zh);
        s.density_lo = lo > 0.0 && zl > cfg_.a ? c.f_lo / ul : 0.0;
        s.density_hi = hi != kInf && zh < cfg_.b ? c.f_hi / uh : 0.0;
    }
    if (flags & kTime) {
        const double h = std::min(1e-5, 0.25 * (u - t));
        const CosSums p = cos_sums(phi_at(t + h, u, 1.0), cfg_, z, zl, zh, false);
        const CosSums m = cos_sums(phi_at(t - h, u, 1.0), cfg_, z, zl, zh, false);
        s.dt = {(p.value.m0 - m.value.m0) / (2 * h), (p.value.m1 - m.value.m1) / (2 * h)};
    }
    if (flags & kScale) {
        const CosSums p = cos_sums(bumped(+1).get(t, u, v_), cfg_, z, zl, zh, false);
        const CosSums m = cos_sums(bumped(-1).get(t, u, v_), cfg_, z, zl, zh, false);
        s.dscale = {(p.value.m0 - m.value.m0) / 2e-5, (p.value.m1 - m.value.m1) / 2e-5};
    }
    return s;
}

std::shared_ptr<TransitionKernel> make_kernel(const ModelSpec& m, const std::optional<CosConfig>& cos,
                                              double v) {
    validate(m);
    if (!cos) {
        if (const auto* ou = std::get_if<ArithmeticOU>(&m)) return std::make_shared<GaussianKernel>(*ou);
        if (const auto* bs = std::get_if<BlackScholesTD>(&m))
            return std::make_shared<LognormalKernel>(*bs);
        throw ValidationError("make_kernel: model " + model_name(m) + " needs a COS configuration");
    }
    return std::make_shared<CosKernel>(m, *cos, v < 0.0 ? initial_variance(m) : v);
}

Moments psi_partial_moments(const TransitionKernel& k, double upper, double t, double u, double x) {
    if (upper < 0.0) throw DomainError("psi_partial_moments: upper < 0");
    if (upper == 0.0) return {};
    return k.moments(t, u, x, 0.0, upper).value;
}

Moments psi_partial_moments(const TransitionDensity& d, double upper) {
    if (upper < 0.0) throw DomainError("psi_partial_moments: upper < 0");
    if (upper == 0.0) return {};
    // Split the range at the bulk of the law so the adaptive rule sees it.
    std::vector<double> cuts{0.0};
    const double loc = d.lognormal() ? std::exp(d.location()) : d.location();
    const double width = d.lognormal() ? loc * (std::exp(d.scale()) - 1.0) : d.scale();
    for (int j = -8; j <= 8; ++j) {
        const double c = loc + j * width;
        if (c > cuts.back() && c < upper) cuts.push_back(c);
    }
    cuts.push_back(upper);
    Moments out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        out.m0 += integrate([&](double X) { return d(X); }, cuts[i], cuts[i + 1], 1e-13).value;
        out.m1 += integrate([&](double X) { return X * d(X); }, cuts[i], cuts[i + 1], 1e-13).value;
    }
    return out;
}

}  // namespace eeb

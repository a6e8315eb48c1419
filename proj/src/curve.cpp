#include "eeb/curve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eeb/errors.hpp"
#include "eeb/quadrature.hpp"

namespace eeb {

Curve Curve::constant(double c0) {
    if (!std::isfinite(c0)) throw ValidationError("curve: non-finite constant");
    Curve c;
    c.kind_ = Kind::constant;
    c.params_ = {c0};
    return c;
}

Curve Curve::exp_decay(double c0, double c1, double c2) {
    if (!std::isfinite(c0) || !std::isfinite(c1) || !std::isfinite(c2))
        throw ValidationError("curve: non-finite exp_decay parameter");
    Curve c;
    c.kind_ = Kind::exp_decay;
    c.params_ = {c0, c1, c2};
    return c;
}

Curve Curve::linear_ttm(double c0, double c1, double maturity) {
    if (!std::isfinite(c0) || !std::isfinite(c1) || !std::isfinite(maturity))
        throw ValidationError("curve: non-finite linear_ttm parameter");
    Curve c;
    c.kind_ = Kind::linear_ttm;
    c.params_ = {c0, c1, maturity};
    return c;
}

Curve Curve::piecewise_constant(std::vector<double> breaks, std::vector<double> values) {
    if (values.size() != breaks.size() + 1)
        throw ValidationError("curve: piecewise_constant needs one more value than breaks");
    if (!std::is_sorted(breaks.begin(), breaks.end()) ||
        std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end())
        throw ValidationError("curve: piecewise_constant breaks must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("curve: non-finite piecewise value");
    Curve c;
    c.kind_ = Kind::piecewise_constant;
    c.params_ = std::move(values);
    c.breaks_ = std::move(breaks);
    return c;
}

double integral_exp(double k, double t, double u) {
    if (k == 0.0) return u - t;
    return std::exp(-k * t) * -std::expm1(-k * (u - t)) / k;
}

double Curve::operator()(double t) const {
    switch (kind_) {
    case Kind::constant:
        return params_[0];
    case Kind::exp_decay:
        return params_[0] + params_[1] * std::exp(-params_[2] * t);
    case Kind::linear_ttm:
        return params_[0] + params_[1] * (params_[2] - t);
    case Kind::piecewise_constant: {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
        return params_[static_cast<std::size_t>(it - breaks_.begin())];
    }
    }
    return 0.0;
}

namespace {

// Sum of f(value, lo, hi) over the constant pieces meeting [t, u], t <= u.
template <class F>
double over_pieces(const std::vector<double>& breaks, const std::vector<double>& values,
                   double t, double u, F&& f) {
    double acc = 0.0;
    double lo = t;
    auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    std::size_t idx = static_cast<std::size_t>(it - breaks.begin());
    while (lo < u) {
        const double hi = idx < breaks.size() ? std::min(u, breaks[idx]) : u;
        acc += f(values[idx], lo, hi);
        lo = hi;
        ++idx;
    }
    return acc;
}

}  // namespace

double Curve::integral(double t, double u) const {
    if (u < t) return -integral(u, t);
    if (u == t) return 0.0;
    switch (kind_) {
    case Kind::constant:
        return params_[0] * (u - t);
    case Kind::exp_decay:
        return params_[0] * (u - t) + params_[1] * integral_exp(params_[2], t, u);
    case Kind::linear_ttm:
        return (u - t) * (params_[0] + params_[1] * (params_[2] - 0.5 * (u + t)));
    case Kind::piecewise_constant:
        return over_pieces(breaks_, params_, t, u,
                           [](double v, double lo, double hi) { return v * (hi - lo); });
    }
    return 0.0;
}

double Curve::integral_of_square(double t, double u) const {
    if (u < t) return -integral_of_square(u, t);
    if (u == t) return 0.0;
    switch (kind_) {
    case Kind::constant:
        return params_[0] * params_[0] * (u - t);
    case Kind::exp_decay: {
        const double c0 = params_[0], c1 = params_[1], k = params_[2];
        return c0 * c0 * (u - t) + 2.0 * c0 * c1 * integral_exp(k, t, u) +
               c1 * c1 * integral_exp(2.0 * k, t, u);
    }
    case Kind::linear_ttm: {
        const double c0 = params_[0], c1 = params_[1];
        const double y0 = params_[2] - u, y1 = params_[2] - t;
        return c0 * c0 * (y1 - y0) + c0 * c1 * (y1 * y1 - y0 * y0) +
               c1 * c1 * (y1 * y1 * y1 - y0 * y0 * y0) / 3.0;
    }
    case Kind::piecewise_constant:
        return over_pieces(breaks_, params_, t, u,
                           [](double v, double lo, double hi) { return v * v * (hi - lo); });
    }
    return 0.0;
}

Curve Curve::scaled(double s) const {
    Curve c = *this;
    switch (kind_) {
    case Kind::constant:
        c.params_[0] *= s;
        break;
    case Kind::exp_decay:
    case Kind::linear_ttm:
        c.params_[0] *= s;
        c.params_[1] *= s;
        break;
    case Kind::piecewise_constant:
        for (double& v : c.params_) v *= s;
        break;
    }
    return c;
}

bool Curve::is_zero() const {
    switch (kind_) {
    case Kind::constant:
        return params_[0] == 0.0;
    case Kind::exp_decay:
    case Kind::linear_ttm:
        return params_[0] == 0.0 && params_[1] == 0.0;
    case Kind::piecewise_constant:
        return std::all_of(params_.begin(), params_.end(), [](double v) { return v == 0.0; });
    }
    return false;
}

double Curve::min_value(double t0, double t1) const {
    if (kind_ == Kind::piecewise_constant) {
        double m = (*this)(t0);
        for (double b : breaks_)
            if (b > t0 && b <= t1) m = std::min(m, (*this)(b));
        return m;
    }
    // remaining kinds are monotone in t
    return std::min((*this)(t0), (*this)(t1));
}

double Curve::max_value(double t0, double t1) const {
    return -scaled(-1.0).min_value(t0, t1);
}

std::string Curve::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::constant:
        os << "constant(" << params_[0] << ")";
        break;
    case Kind::exp_decay:
        os << "exp_decay(" << params_[0] << "," << params_[1] << "," << params_[2] << ")";
        break;
    case Kind::linear_ttm:
        os << "linear_ttm(" << params_[0] << "," << params_[1] << "," << params_[2] << ")";
        break;
    case Kind::piecewise_constant:
        os << "piecewise_constant[" << params_.size() << "]";
        break;
    }
    return os.str();
}

double DiscountCurve::operator()(double t, double s) const { return discount_factor(r_, t, s); }

double discount_factor(const Curve& r, double t, double s) {
    if (t > s) throw DomainError("discount_factor: t > s");
    return std::exp(-r.integral(t, s));
}

double integrated_carry(const Curve& r, const Curve& q, double t, double u) {
    if (t > u) throw DomainError("integrated_carry: t > u");
    return r.integral(t, u) - q.integral(t, u);
}

namespace {

// int_0^L exp(m tau - c tau^2 / 2) d tau for c > 0 via the error function.
// Returns NaN when the difference of erf values is too ill-conditioned.
double gaussian_segment(double m, double c, double L) {
    const double centre = m / c;
    const double expo = 0.5 * m * centre;
    if (expo > 600.0) return std::nan("");
    const double s = std::sqrt(0.5 * c);
    const double a = -s * centre, b = s * (L - centre);
    double diff, scale;
    if (a >= 0.0) {
        diff = std::erfc(a) - std::erfc(b);
        scale = std::erfc(a);
    } else if (b <= 0.0) {
        diff = std::erfc(-b) - std::erfc(-a);
        scale = std::erfc(-b);
    } else {
        diff = std::erf(b) - std::erf(a);
        scale = std::abs(diff);
    }
    if (!(diff > 1e-3 * scale)) return std::nan("");
    return std::exp(expo) * std::sqrt(M_PI / (2.0 * c)) * diff;
}

}  // namespace

ThetaIntegrals theta_integrals(const Curve& theta, double t, double u, double eps) {
    if (t > u) throw DomainError("theta_integrals: t > u");
    if (!(eps > 0.0)) throw DomainError("theta_integrals: eps must be positive");
    const double half_eps2 = 0.5 * eps * eps;
    const double L = u - t;
    ThetaIntegrals out;
    switch (theta.kind()) {
    case Curve::Kind::constant: {
        const double th = theta.params()[0];
        out.C = half_eps2 * (th == 0.0 ? L : std::expm1(th * L) / th);
        out.A = [th, t](double s) { return std::exp(th * (s - t)); };
        return out;
    }
    case Curve::Kind::linear_ttm: {
        const double th_t = theta(t), c1 = theta.params()[1];
        out.A = [th_t, c1, t](double s) {
            const double tau = s - t;
            return std::exp(th_t * tau - 0.5 * c1 * tau * tau);
        };
        double I = std::nan("");
        if (c1 == 0.0)
            I = th_t == 0.0 ? L : std::expm1(th_t * L) / th_t;
        else if (c1 > 0.0)
            I = gaussian_segment(th_t, c1, L);
        if (std::isnan(I)) {
            static const GaussLegendre gl(32);
            I = gl([&](double tau) { return std::exp(th_t * tau - 0.5 * c1 * tau * tau); }, 0.0, L);
        }
        out.C = half_eps2 * I;
        return out;
    }
    case Curve::Kind::piecewise_constant: {
        Curve th = theta;
        double acc = 0.0;
        const auto& br = theta.breaks();
        const auto& vals = theta.params();
        double lo = t, logA = 0.0;
        auto it = std::upper_bound(br.begin(), br.end(), t);
        std::size_t idx = static_cast<std::size_t>(it - br.begin());
        while (lo < u) {
            const double hi = idx < br.size() ? std::min(u, br[idx]) : u;
            const double v = vals[idx], d = hi - lo;
            acc += std::exp(logA) * (v == 0.0 ? d : std::expm1(v * d) / v);
            logA += v * d;
            lo = hi;
            ++idx;
        }
        out.C = half_eps2 * acc;
        out.A = [th, t](double s) { return std::exp(th.integral(t, s)); };
        return out;
    }
    case Curve::Kind::exp_decay: {
        Curve th = theta;
        out.A = [th, t](double s) { return std::exp(th.integral(t, s)); };
        auto A = out.A;
        out.C = half_eps2 * integrate(A, t, u, 1e-15 * std::max(L, 1e-300)).value;
        return out;
    }
    }
    return out;
}

}  // namespace eeb

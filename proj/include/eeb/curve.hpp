/**
 * @file curve.hpp
 * @brief Deterministic time-dependent parameters with exact integrals
 */

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace eeb {

/// Deterministic parameter curve c(t).
///
/// Kinds:
///   constant            c0
///   exp_decay           c0 + c1 exp(-c2 t)
///   linear_ttm          c0 + c1 (T - t)
///   piecewise_constant  values[i] on [breaks[i-1], breaks[i]), flat extrapolation
class Curve {
public:
    enum class Kind { constant, exp_decay, linear_ttm, piecewise_constant };

    Curve() = default;

    static Curve constant(double c0);
    static Curve exp_decay(double c0, double c1, double c2);
    static Curve linear_ttm(double c0, double c1, double maturity);
    static Curve piecewise_constant(std::vector<double> breaks, std::vector<double> values);

    Kind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& breaks() const { return breaks_; }

    double operator()(double t) const;

    /// Exact integral over [t, u] (signed, any order of limits).
    double integral(double t, double u) const;

    /// Exact integral of c(s)^2 over [t, u].
    double integral_of_square(double t, double u) const;

    /// c(t) multiplied by s everywhere.
    Curve scaled(double s) const;

    bool is_zero() const;
    double min_value(double t0, double t1) const;
    double max_value(double t0, double t1) const;

    std::string describe() const;

private:
    Kind kind_ = Kind::constant;
    std::vector<double> params_{0.0};
    std::vector<double> breaks_;
};

/// exp(-k (u - t)) integrated: int_t^u exp(-k s) ds, stable as k -> 0.
double integral_exp(double k, double t, double u);

/// Discount factor D(t, s) = exp(-int_t^s r).
class DiscountCurve {
public:
    explicit DiscountCurve(Curve r) : r_(std::move(r)) {}
    double operator()(double t, double s) const;
    const Curve& rate() const { return r_; }

private:
    Curve r_;
};

double discount_factor(const Curve& r, double t, double s);

/// int_t^u (r - q) ds.
double integrated_carry(const Curve& r, const Curve& q, double t, double u);

/// Quantities entering the 3/2 characteristic function.
struct ThetaIntegrals {
    double C = 0.0;                     ///< (eps^2/2) int_t^u A(s) ds
    std::function<double(double)> A;    ///< A(s) = exp(int_t^s theta)
};

ThetaIntegrals theta_integrals(const Curve& theta, double t, double u, double eps);

}  // namespace eeb

/**
 * @file models.hpp
 * @brief Model specifications, characteristic functions and closed-form densities
 */

#pragma once

#include <complex>
#include <string>
#include <variant>

#include "eeb/curve.hpp"

namespace eeb {

using cplx = std::complex<double>;

/// Lognormal dynamics dX = (r - q) X dt + sigma X dW.
struct BlackScholesTD {
    Curve r, q, sigma;
};

/// dX = (r - q) X dt + sigma dW with sigma in price units (normal volatility).
struct ArithmeticOU {
    Curve r, q, sigma;
};

/// Heston with constant or piecewise-constant kappa, theta, eps, rho.
struct Heston {
    Curve r, q;
    Curve kappa, theta, eps, rho;
    double v0 = 0.04;
};

/// 3/2 model dv = kappa v (theta(t) - v) dt + eps v^{3/2} dW (variance units).
struct ThreeHalves {
    double kappa = 0.0, eps = 0.0, rho = 0.0;
    Curve theta, r, q;
    double v0 = 1.0;
};

/// Normal inverse Gaussian Levy model; pricing CF is martingale-corrected.
struct NIG {
    double alpha = 0.0, beta = 0.0, delta = 0.0, mu = 0.0;
    Curve r, q;
};

using ModelSpec = std::variant<BlackScholesTD, ArithmeticOU, Heston, ThreeHalves, NIG>;

std::string model_name(const ModelSpec& m);

/// Throws ValidationError with a reason when the parameters are inadmissible.
void validate(const ModelSpec& m);

const Curve& rate_curve(const ModelSpec& m);
const Curve& dividend_curve(const ModelSpec& m);

/// Models with a log-price characteristic function (all but ArithmeticOU).
bool has_characteristic_function(const ModelSpec& m);

/// Initial variance state (v0) for stochastic-volatility models, 0 otherwise.
double initial_variance(const ModelSpec& m);

/// Multiply the volatility curve (sigma, or eps for SV models) by s.
ModelSpec with_vol_scale(const ModelSpec& m, double s);

cplx cf_black_scholes(const BlackScholesTD& m, double t, double u, cplx w, double x);
cplx cf_heston(const Heston& m, double t, double u, cplx w, double x, double v);
cplx cf_three_halves(const ThreeHalves& m, double t, double u, cplx w, double x, double v);

/// delta (sqrt(alpha^2 - beta^2) - sqrt(alpha^2 - (beta + i w)^2)).
cplx nig_char_exponent(const NIG& m, cplx w);
/// exp(tau Psi(w) + i w mu tau): the raw NIG increment CF.
cplx nig_increment_cf(const NIG& m, double tau, cplx w);
/// Risk-neutral log-price CF.
cplx cf_nig(const NIG& m, double t, double u, cplx w, double x);
double nig_levy_density(const NIG& m, double y);

/// Dispatch on the model; v is ignored by one-factor models.
cplx characteristic_function(const ModelSpec& m, double t, double u, cplx w, double x, double v);

/// Gaussian transition law of the arithmetic OU model.
struct GaussianLaw {
    double mean = 0.0;
    double variance = 0.0;
};

GaussianLaw ou_transition(const ArithmeticOU& m, double t, double u, double x);

/// Closed-form transition density psi(X_u | x, t) in price units.
class TransitionDensity {
public:
    static TransitionDensity ou(const ArithmeticOU& m, double t, double u, double x);
    static TransitionDensity black_scholes(const BlackScholesTD& m, double t, double u, double x);

    double operator()(double X) const;
    /// Location and scale of the underlying normal (price for OU, log-price for BS).
    double location() const { return loc_; }
    double scale() const { return scale_; }
    bool lognormal() const { return lognormal_; }

private:
    double loc_ = 0.0, scale_ = 1.0;
    bool lognormal_ = false;
};

}  // namespace eeb

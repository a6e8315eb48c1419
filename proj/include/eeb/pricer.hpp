/**
 * @file pricer.hpp
 * @brief American prices as European value plus early-exercise premium, and Greeks
 */

#pragma once

#include <optional>

#include "eeb/boundary.hpp"

namespace eeb {

enum class Region { continuation, exercise };

struct Greeks {
    double delta = 0.0;
    double gamma = 0.0;
    double theta = 0.0;   ///< dV/dt
    double vega = 0.0;    ///< dV/ds for a multiplicative volatility scale s at s = 1
    bool near_boundary = false;
};

struct PricingResult {
    double european = 0.0;
    double eep = 0.0;
    double american = 0.0;
    Region region = Region::continuation;
    std::optional<Greeks> greeks;
};

/// Decomposition price at (t, x) from a solved boundary row.
/// For puts x <= X_B(t) is exercise; for calls x >= X_B(t). The premium uses the
/// quadrature the boundary was solved with.
PricingResult price_american(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                             const Contract& contract, double t, double x, Eigen::Index row = 0);

PricingResult price_american_put(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                                 const Contract& contract, double t, double x, Eigen::Index row = 0);
PricingResult price_american_call(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                                  const Contract& contract, double t, double x, Eigen::Index row = 0);

struct DeltaGamma {
    double delta = 0.0;
    double gamma = 0.0;
    bool near_boundary = false;
};

/// Delta and gamma with the boundary held fixed; (-1, 0) / (1, 0) in the exercise region.
DeltaGamma greek_delta_gamma(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                             const Contract& contract, double t, double x, Eigen::Index row = 0);

/// dV/dt: time derivative of the European leg and of the premium integrand with the
/// boundary beyond t held fixed (the lower-limit term vanishes off the boundary).
double greek_theta(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                   const Contract& contract, double t, double x, Eigen::Index row = 0);

/// dX_B(t_i)/ds on the boundary grid from the differentiated discrete equation
/// (upper-triangular solve, zero at maturity).
Eigen::VectorXd boundary_scale_sensitivity(const TransitionKernel& kernel,
                                           const ExerciseBoundary& boundary,
                                           const Contract& contract, Eigen::Index row = 0);

/// dV/ds including the boundary sensitivity term.
double greek_vega_fredholm(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                           const Contract& contract, double t, double x, Eigen::Index row = 0);

/// Price and all four Greeks.
PricingResult price_with_greeks(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                                const Contract& contract, double t, double x, Eigen::Index row = 0);

}  // namespace eeb

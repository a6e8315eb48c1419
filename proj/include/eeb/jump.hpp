/**
 * @file jump.hpp
 * @brief NIG jump engine: the Omega integrand, terminal condition, boundary march and
 *        the Pade pseudo-differential shortcut
 */

#pragma once

#include <Eigen/Dense>

#include <functional>

#include "eeb/boundary.hpp"
#include "eeb/models.hpp"

namespace eeb {

/// Tail integrals int_{y0}^inf {1, e^y} nu(dy) of the NIG Levy measure, y0 > 0.
struct LevyTail {
    double i0 = 0.0;
    double i1 = 0.0;
};

LevyTail nig_levy_tail(const NIG& m, double y0);

/// European put P_E(u, s) at a fixed time u as a function of the price s.
using EuropeanPutFn = std::function<double(double s)>;

/// Omega(u, x) = (r - q) x + r (K - x) + int_{log(xb/x)}^inf max(P_E(u, x e^y) - K + x e^y, 0) nu(dy)
/// for x <= xb. Returns +inf when the integrand stays positive at a zero lower limit.
double omega_direct(const NIG& m, double u, double x, double xb, double K, const EuropeanPutFn& put);

/// Residual of the terminal equation, r K - q b - K I0 + b I1 at y0 = log(K / b).
double terminal_jump_residual(const NIG& m, double K, double T, double b);

/// First root of the terminal equation in (1e-6 K, K), or K when there is none.
/// Returns 0 when the residual is not positive at the lower end (never exercised).
double terminal_boundary_jump(const NIG& m, double K, double T);

/// P(X_u <= X_t) as u -> t: the NIG increment over tau scales like a Cauchy law with
/// location (r - q - Psi(-i)) tau and scale delta tau.
double nig_short_time_mass_below(const NIG& m, double t);

struct JumpSolverOptions {
    int table_points = 101;   ///< Omega table nodes on [0, X_B(u_j)]
    int threads = 1;          ///< workers for the table construction
    double flat_tolerance = 1e-5;   ///< residual level (relative to K) treated as zero when bracketing
};

/// Backward march for an American put under NIG with COS transition moments and a
/// per-node Omega table interpolated linearly in X.
ExerciseBoundary solve_boundary_jump(const NIG& m, const Contract& contract, const SolverConfig& cfg,
                                     const CosConfig& cos, const JumpSolverOptions& opt = {});

/// (2,2) Pade coefficients of the NIG pseudo-differential operator.
struct PadeCoefficients {
    double a1 = 0.0, a2 = 0.0, b1 = 0.0, b2 = 0.0;
};

PadeCoefficients nig_pade_coefficients(double alpha, double beta);

struct PadeOperator {
    PadeCoefficients c;
    double delta = 0.0;
    double strike = 0.0;
    double C1 = 0.0;   ///< homogeneous-solution constant; 0 unless b1 / b2 < 0
};

PadeOperator make_pade_operator(const NIG& m, double K);

/// a(x) = delta (a1 + a2) / (b1 + b2) (K - x) + C1 (b2 / b1) (K^{-b1/b2} - x^{-b1/b2}).
double nig_pade_apply(const PadeOperator& op, double K, double x);

/// (r - q) x + r (K - x) + nig_pade_apply(op, K, x).
double omega_pseudo(const NIG& m, double u, double x, const PadeOperator& op);

/// Exact action of the NIG exponent on K - e^z at x: -x delta (sqrt(a^2 - b^2) - sqrt(a^2 - (b + 1)^2)).
double nig_operator_exact(const NIG& m, double x);

}  // namespace eeb

/**
 * @file boundary.hpp
 * @brief Early exercise boundary from the backward Volterra march
 */

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eeb/cos.hpp"
#include "eeb/kernel.hpp"
#include "eeb/models.hpp"

namespace eeb {

enum class OptionKind { put, call };

struct Contract {
    OptionKind kind = OptionKind::put;
    double strike = 100.0;
    double maturity = 1.0;

    void validate() const;
};

struct SolverConfig {
    enum class Rule { trapezoid, simpson };

    int steps = 25;                ///< M intervals, M + 1 nodes
    double tolerance = 0.0;        ///< absolute root tolerance; 0 means 1e-10 K
    int max_iterations = 100;
    Rule rule = Rule::trapezoid;
    /// Quadrature nodes per boundary interval; between its own nodes the boundary is
    /// interpolated as in boundary_interpolation_weight. 1 gives the plain rule.
    int substeps = 1;

    void validate() const;
    double tolerance_for(double K) const { return tolerance > 0.0 ? tolerance : 1e-10 * K; }
};

/// A value with derivatives in x, t and the volatility scale.
struct ValueSens {
    double value = 0.0, dx = 0.0, dxx = 0.0, dt = 0.0, dscale = 0.0;
};

/// Boundary X_B(t_i) on an ascending grid; one row per initial variance.
struct ExerciseBoundary {
    OptionKind kind = OptionKind::put;
    double strike = 0.0;
    Eigen::VectorXd times;
    Eigen::MatrixXd values;          ///< rows x times
    Eigen::VectorXd variance_axis;   ///< empty for a single curve
    Eigen::MatrixXi iterations;
    Eigen::MatrixXd residuals;
    std::vector<std::string> row_status;   ///< "ok" or the error text
    std::vector<std::string> diagnostics;
    SolverConfig::Rule rule = SolverConfig::Rule::trapezoid;  ///< quadrature used by the solve
    int substeps = 1;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::VectorXd row(Eigen::Index r) const { return values.row(r).transpose(); }
    /// Interpolation in t per boundary_interpolation_weight; throws DomainError outside the grid.
    double at(double t, Eigen::Index row = 0) const;
};

/// Weight mu of the right node at fraction lambda of an interval: X = (1 - mu) X_c + mu X_{c+1}.
/// Linear in t, except on the interval ending at maturity where the boundary follows
/// sqrt(T - t): mu = 1 - sqrt(1 - lambda).
double boundary_interpolation_weight(double lambda, bool last_interval);

/// K min(1, r_T / q_T); K when q_T <= 0.
double terminal_boundary_diffusion(double r_T, double q_T, double K);

/// K max(1, r_T / q_T); +inf (never exercised) when q_T <= 0.
double terminal_boundary_diffusion_call(double r_T, double q_T, double K);

/// Quadrature weights on an ascending uniform grid.
Eigen::VectorXd quadrature_weights(const Eigen::VectorXd& grid, SolverConfig::Rule rule);

/// Split every interval of an ascending grid into `substeps` equal pieces.
Eigen::VectorXd refine_grid(const Eigen::VectorXd& coarse, int substeps);

/// The discretised integral equation on a fixed time grid.
///
/// residual(i, X, b) = payoff(X) - V_E(t_i, X) - sum_{u_j>t_i} w_j D E[H 1_E]
///                     - w_0 H(t_i, X)^+ / 2,
/// the last term being the zero-elapsed-time limit at the diagonal node. The sum runs
/// over the refined quadrature grid with b linearly interpolated and b_i = X.
class VolterraSystem {
public:
    VolterraSystem(const TransitionKernel& kernel, Contract contract, Eigen::VectorXd times,
                   SolverConfig::Rule rule = SolverConfig::Rule::trapezoid, int substeps = 1);

    double residual(Eigen::Index i, double X, const Eigen::VectorXd& boundary) const;

    /// Boundary at the quadrature nodes from node values (linear in t).
    Eigen::VectorXd quadrature_boundary(const Eigen::VectorXd& boundary) const;
    const Eigen::VectorXd& quadrature_times() const { return fine_; }
    int substeps() const { return substeps_; }

    /// r(u) K - q(u) X for puts, q(u) X - r(u) K for calls.
    double H(double u, double X) const;
    /// Exercise region endpoints for boundary level xb.
    std::pair<double, double> region(double xb) const;
    bool active(double u, double xb) const;

    /// European value at (t, x) with the sensitivities requested by flags.
    ValueSens european(double t, double x, unsigned flags = kValueOnly) const;
    double payoff(double X) const;

    const Eigen::VectorXd& times() const { return times_; }
    /// Weights over the quadrature nodes from t_i to T.
    const Eigen::VectorXd& weights(Eigen::Index i) const { return weights_[i]; }
    const TransitionKernel& kernel() const { return kernel_; }
    const Contract& contract() const { return contract_; }

private:
    const TransitionKernel& kernel_;
    Contract contract_;
    Eigen::VectorXd times_;
    Eigen::VectorXd fine_;
    int substeps_;
    std::vector<Eigen::VectorXd> weights_;  // weights_[i] over fine_[i * substeps ..]
};

/// Outcome of the scalar boundary equation at one node.
struct NodeRoot {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

/// Safeguarded secant with bisection fallback on [lo, hi].
///
/// f must be positive below the root and negative above it (use sign = -1 to flip).
/// Stops when |f| <= tol; throws NodeError after max_iterations.
NodeRoot find_boundary_root(const std::function<double(double)>& f, double lo, double hi,
                            double guess, double tol, int max_iterations, double sign = 1.0,
                            int node = -1);

/// Same iteration started from a bracket a < b with known f(a) > 0 >= f(b) (puts);
/// iterations count only the evaluations made here.
NodeRoot find_boundary_root_bracketed(const std::function<double(double)>& f, double a, double fa, double b,
                                      double fb, double tol, int max_iterations, int node = -1);

/// Backward march on t_i = t0 + i (T - t0) / M with a given terminal value.
ExerciseBoundary solve_boundary(const TransitionKernel& kernel, const Contract& contract,
                                const SolverConfig& cfg, double terminal, double t0 = 0.0);

/// Closed-form density route (OU Gaussian, Black-Scholes lognormal).
ExerciseBoundary solve_boundary_density(const ModelSpec& m, const Contract& contract,
                                        const SolverConfig& cfg, double t0 = 0.0);

/// COS route for models with a characteristic function; v < 0 uses the model's v0.
ExerciseBoundary solve_boundary_cos(const ModelSpec& m, const Contract& contract,
                                    const SolverConfig& cfg, const CosConfig& cos,
                                    double v = -1.0, double t0 = 0.0);

/// Independent COS solves per initial variance, run on up to `threads` workers.
/// Failed rows are NaN with the error text in row_status.
ExerciseBoundary solve_boundary_family(const ModelSpec& m, const Contract& contract,
                                       const SolverConfig& cfg, const CosConfig& cos,
                                       const std::vector<double>& v_grid, int threads = 1,
                                       double t0 = 0.0);

/// max_i |X_call(t_i) X_put(t_i) - K^2| over nodes where both are finite and positive.
double put_call_boundary_symmetry_check(const ExerciseBoundary& put, const ExerciseBoundary& call,
                                        double K);

/// Terminal value of the diffusion rule for the contract at maturity.
double terminal_boundary(const Curve& r, const Curve& q, const Contract& contract);

}  // namespace eeb

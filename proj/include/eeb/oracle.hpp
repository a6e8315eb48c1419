/**
 * @file oracle.hpp
 * @brief Independent reference pricers: CN-PSOR lattice, CRR tree, OU Monte Carlo
 */

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

#include "eeb/boundary.hpp"
#include "eeb/models.hpp"

namespace eeb {

/// Finite-difference lattice parameters.
struct Lattice1D {
    int space_nodes = 2001;
    int time_steps = 2000;
    double theta = 0.5;           ///< 0.5 Crank-Nicolson, 1 implicit Euler
    double relaxation = 1.2;      ///< PSOR over-relaxation factor
    double tolerance = 1e-10;     ///< PSOR stopping rule on the max update
    int max_sweeps = 200000;
    int rannacher_steps = 2;      ///< leading steps replaced by two implicit half-steps
    double span_sd = 10.0;        ///< grid half-width in standard deviations

    void validate() const;
};

struct LatticeSolution {
    Eigen::VectorXd grid;      ///< price nodes
    Eigen::VectorXd values;    ///< option value at t = 0 on the grid
    Eigen::VectorXd times;     ///< t_n, ascending, n = 0..steps
    Eigen::VectorXd boundary;  ///< extracted free boundary at t_n (price units)
    int max_sweeps_used = 0;

    /// Linear interpolation of the t = 0 value.
    double price(double x) const;
    /// Free boundary at t by linear interpolation in time.
    double boundary_at(double t) const;
};

using LatticeModel = std::variant<BlackScholesTD, ArithmeticOU>;

/// Crank-Nicolson with projected SOR for an American put.
/// Black-Scholes uses a log-price grid centred on log K; OU a price grid on [0, K + span sd].
/// The free boundary is the last node below the first with V - (K - x) > 1e-8.
LatticeSolution psor_american_put(const LatticeModel& model, const Contract& contract,
                                  const Lattice1D& lattice, bool american = true);

/// Cox-Ross-Rubinstein tree with constant parameters.
double binomial_american(const Contract& contract, double spot, double r, double q, double sigma,
                         int steps, bool american = true);

struct McMoments {
    double mean = 0.0, mean_se = 0.0;
    double variance = 0.0, variance_se = 0.0;
    std::vector<double> thresholds;
    std::vector<double> psi1, psi1_se;   ///< P(0 <= X_u <= threshold)
    std::vector<double> psi2, psi2_se;   ///< E[X_u 1{0 <= X_u <= threshold}]
};

/// Euler simulation of the OU model from (t, x) to u with per-shard seeded streams.
McMoments mc_density_moments(const ArithmeticOU& m, double t, double u, double x, std::int64_t paths,
                             double dt, const std::vector<double>& thresholds, std::uint64_t seed = 42,
                             int shards = 8, int threads = 1);

}  // namespace eeb

/**
 * @file config.hpp
 * @brief JSON run configuration (schema 1) with field-path validation errors
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "eeb/boundary.hpp"
#include "eeb/cos.hpp"
#include "eeb/errors.hpp"
#include "eeb/jump.hpp"
#include "eeb/models.hpp"
#include "eeb/oracle.hpp"

namespace eeb {

/// Invalid configuration; `path` names the offending field, e.g. "model.sigma".
class ConfigError : public ValidationError {
public:
    ConfigError(std::string path, const std::string& what)
        : ValidationError(path + ": " + what), path(std::move(path)) {}
    std::string path;
};

struct PriceLattice {
    std::vector<double> times;   ///< evaluation times; default {t0}
    std::vector<double> spots;   ///< empty means "at the strike"
};

struct OracleOptions {
    int binomial_steps = 10000;
    Lattice1D lattice;
    double price_tolerance = 5e-4;     ///< relative gap for price rows
    double boundary_tolerance = 0.01;  ///< nodewise gap as a fraction of K
};

struct RunConfig {
    ModelSpec model;
    bool sigma_per_strike = false; ///< OU: sigma is given per unit strike and scaled by K
    OptionKind kind = OptionKind::put;
    std::vector<double> strikes;
    double maturity = 1.0;
    SolverConfig solver;
    double t0 = 0.0;
    std::optional<CosConfig> cos;
    double cos_half_width = 0.0;   ///< > 0: COS range log K -+ half_width per strike
    std::vector<double> v_grid;
    PriceLattice lattice;
    bool fd_compare = false;
    OracleOptions oracle;
    JumpSolverOptions jump;
    std::uint64_t seed = 0;
    nlohmann::json resolved;       ///< canonical form with defaults filled in

    Contract contract(double K) const { return {kind, K, maturity}; }
    /// Model for a strike, times a volatility scale.
    ModelSpec model_for(double K, double vol_scale = 1.0) const;
    /// COS range for a strike (centred when cos_half_width > 0).
    std::optional<CosConfig> cos_for(double K) const;
};

/// Parse and validate; throws ConfigError with the field path.
RunConfig parse_config(const nlohmann::json& j, std::uint64_t seed = 0);
RunConfig load_config(const std::string& path, std::uint64_t seed = 0);

/// Curve from a number (constant) or {"type": ..., parameters}.
Curve parse_curve(const nlohmann::json& j, const std::string& path);

/// FNV-1a 64-bit hash of the canonical resolved config, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace eeb

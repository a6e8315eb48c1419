/**
 * @file cli.hpp
 * @brief Command implementations behind the `engine` executable
 */

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "eeb/config.hpp"
#include "eeb/csv.hpp"

namespace eeb {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_numerical = 3,
    exit_tolerance = 4,
};

struct CommandResult {
    CsvTable table;
    int exit_code = exit_ok;
};

/// Boundary per strike (and per variance row): t, X_B, iterations, residual, status.
CommandResult cmd_boundary(const RunConfig& cfg, int threads = 1);
/// European, premium and American value on the strike x variance x time x spot lattice.
CommandResult cmd_price(const RunConfig& cfg, int threads = 1);
/// Greeks on the same lattice; with lattice.fd_compare also finite-difference columns.
CommandResult cmd_greeks(const RunConfig& cfg, int threads = 1);
/// Engine against the binomial tree and PSOR (constant Black-Scholes) or against the
/// PSOR free boundary (OU); exit_tolerance when any row fails.
CommandResult cmd_oracle_compare(const RunConfig& cfg, int threads = 1);

/// Full command line (args[0] is the program name); returns the process exit code.
int engine_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eeb

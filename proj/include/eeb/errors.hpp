/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by the engine
 */

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eeb {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration (maps to CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a pole of Gamma or of the Kummer function.
class PoleError : public Error {
public:
    using Error::Error;
};

/// Grid / boundary / vector size disagreement.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Numerical failure (maps to CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Series or iteration did not converge; keeps the partial result.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double partial, double bound)
        : NumericalError(what), partial_sum(partial), error_bound(bound) {}
    double partial_sum;
    double error_bound;
};

/// Root finder failure at a boundary node.
class NodeError : public NumericalError {
public:
    NodeError(const std::string& what, int node, std::vector<double> trace)
        : NumericalError(what), node_index(node), residual_trace(std::move(trace)) {}
    int node_index;
    std::vector<double> residual_trace;
};

/// COS truncation range problems.
class RangeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace eeb

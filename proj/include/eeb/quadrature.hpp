/**
 * @file quadrature.hpp
 * @brief Adaptive Gauss-Kronrod and fixed Gauss-Legendre rules
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "eeb/errors.hpp"

namespace eeb {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae on [-1,1] (non-negative half) and weights.
inline constexpr std::array<double, 8> kGkNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kGkNodes[j];
        const double s = f(c - dx) + f(c + dx);
        kronrod += kKronrodWeights[j] * s;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
    }
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

template <class F>
void gk_recurse(F& f, double a, double b, double tol, int depth, QuadResult& acc) {
    auto [value, err] = gk15(f, a, b);
    acc.evaluations += 15;
    if (err <= tol || depth <= 0 || std::abs(b - a) < 1e-15 * (1.0 + std::abs(a))) {
        acc.value += value;
        acc.error += err;
        return;
    }
    const double m = 0.5 * (a + b);
    gk_recurse(f, a, m, 0.5 * tol, depth - 1, acc);
    gk_recurse(f, m, b, 0.5 * tol, depth - 1, acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) by recursive bisection.
/// The absolute tolerance is split evenly between the two halves.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-12, int max_depth = 40) {
    QuadResult acc;
    if (a == b) return acc;
    if (!(std::isfinite(a) && std::isfinite(b)))
        throw DomainError("integrate: infinite limits are not supported");
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    detail::gk_recurse(f, a, b, abs_tol, max_depth, acc);
    if (!std::isfinite(acc.value)) throw NumericalError("integrate: non-finite integrand");
    acc.value *= sign;
    return acc;
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
struct GaussLegendre {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    explicit GaussLegendre(int n) : nodes(n), weights(n) {
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    template <class F>
    double operator()(F&& f, double a, double b) const {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (Eigen::Index i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
        return s * h;
    }
};

}  // namespace eeb

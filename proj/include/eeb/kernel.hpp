/**
 * @file kernel.hpp
 * @brief Transition kernels: partial moments of X_u given X_t = x with sensitivities
 */

#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>

#include "eeb/cos.hpp"
#include "eeb/models.hpp"

namespace eeb {

/// Zeroth and first partial moments int_lo^hi {1, X} psi(X) dX.
struct Moments {
    double m0 = 0.0;
    double m1 = 0.0;
};

/// Moments with derivatives in the conditioning price x, the conditioning time t
/// (u fixed) and a multiplicative volatility scale (at scale 1).
struct MomentSens {
    Moments value, dx, dxx, dt, dscale;
    double density_lo = 0.0;  ///< psi(lo) in price units
    double density_hi = 0.0;  ///< psi(hi) in price units
};

enum SensFlags : unsigned {
    kValueOnly = 0,
    kSpace = 1,  ///< dx, dxx and the endpoint densities
    kTime = 2,
    kScale = 4,
    kAllSens = 7,
};

/// Law of X_u conditional on X_t = x. lo may be -inf and hi +inf.
class TransitionKernel {
public:
    virtual ~TransitionKernel() = default;

    virtual MomentSens moments(double t, double u, double x, double lo, double hi,
                               unsigned flags = kValueOnly) const = 0;

    /// Lowest attainable price (0 for positive models, -inf for OU).
    virtual double support_lower() const { return 0.0; }

    /// Conditioning prices x the kernel accepts, as an open interval.
    virtual std::pair<double, double> conditioning_range() const {
        return {support_lower(), std::numeric_limits<double>::infinity()};
    }

    virtual const Curve& rate() const = 0;
    virtual const Curve& dividend() const = 0;
    virtual std::string name() const = 0;
};

/// Closed-form Gaussian law of the arithmetic OU model.
class GaussianKernel final : public TransitionKernel {
public:
    explicit GaussianKernel(ArithmeticOU m) : m_(std::move(m)) {}
    MomentSens moments(double t, double u, double x, double lo, double hi,
                       unsigned flags = kValueOnly) const override;
    double support_lower() const override { return -std::numeric_limits<double>::infinity(); }
    const Curve& rate() const override { return m_.r; }
    const Curve& dividend() const override { return m_.q; }
    std::string name() const override { return "gaussian"; }

private:
    ArithmeticOU m_;
};

/// Closed-form lognormal law of Black-Scholes with deterministic curves.
class LognormalKernel final : public TransitionKernel {
public:
    explicit LognormalKernel(BlackScholesTD m) : m_(std::move(m)) {}
    MomentSens moments(double t, double u, double x, double lo, double hi,
                       unsigned flags = kValueOnly) const override;
    const Curve& rate() const override { return m_.r; }
    const Curve& dividend() const override { return m_.q; }
    std::string name() const override { return "lognormal"; }

private:
    BlackScholesTD m_;
};

/// COS-reconstructed law for any model with a characteristic function.
///
/// x derivatives multiply the CF by (i w); t and scale derivatives are central
/// differences of the CF (scale step 1e-5 relative).
class CosKernel final : public TransitionKernel {
public:
    CosKernel(ModelSpec m, CosConfig cfg, double v);

    MomentSens moments(double t, double u, double x, double lo, double hi,
                       unsigned flags = kValueOnly) const override;
    std::pair<double, double> conditioning_range() const override {
        return {std::exp(cfg_.a), std::exp(cfg_.b)};
    }
    const Curve& rate() const override { return rate_curve(m_); }
    const Curve& dividend() const override { return dividend_curve(m_); }
    std::string name() const override { return "cos"; }

    const CfCache& cache() const { return *base_; }
    const CosConfig& config() const { return cfg_; }
    double variance() const { return v_; }
    const ModelSpec& model() const { return m_; }

    /// phi(w_k; 0) at (t, u) for the model with volatility scale s.
    Eigen::VectorXcd phi_at(double t, double u, double scale) const;

private:
    const CfCache& bumped(int sign) const;

    ModelSpec m_;
    CosConfig cfg_;
    double v_;
    std::shared_ptr<CfCache> base_;
    mutable std::shared_ptr<CfCache> up_, down_;
    mutable std::mutex mu_;
};

/// Kernel for a model: closed form for OU and Black-Scholes unless a COS
/// configuration is supplied, COS otherwise.
std::shared_ptr<TransitionKernel> make_kernel(const ModelSpec& m,
                                              const std::optional<CosConfig>& cos = std::nullopt,
                                              double v = -1.0);

/// Psi1 = int_0^upper psi dX and Psi2 = int_0^upper X psi dX.
Moments psi_partial_moments(const TransitionKernel& k, double upper, double t, double u, double x);

/// Same quantities for a closed-form density by adaptive quadrature.
Moments psi_partial_moments(const TransitionDensity& d, double upper);

}  // namespace eeb

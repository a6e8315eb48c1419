#include "eeb/pricer.hpp"

#include <cmath>
#include <sstream>

#include "eeb/errors.hpp"

namespace eeb {

namespace {

bool in_exercise(const Contract& c, double x, double xb) {
    if (c.kind == OptionKind::put) return xb > 0.0 && x <= xb;
    return std::isfinite(xb) && x >= xb;
}

void check_coverage(const ExerciseBoundary& b, const Contract& c, double t) {
    if (b.times.size() < 2) throw DomainError("pricer: empty boundary");
    if (std::abs(b.times[b.times.size() - 1] - c.maturity) > 1e-12)
        throw DomainError("pricer: boundary does not end at maturity");
    if (t < b.times[0] - 1e-12 || t > c.maturity)
        throw DomainError("pricer: boundary does not cover [t, T]");
    if (b.kind != c.kind) throw ValidationError("pricer: boundary kind differs from contract kind");
}

/// Quadrature grid {t} U {u_j > t} with boundary levels and weights. Each node
/// lies on boundary interval [t_c, t_{c+1}] with right-node weight mu.
struct SubGrid {
    Eigen::VectorXd u, xb, w;
    std::vector<Eigen::Index> coarse;
    std::vector<double> mu;
};

SubGrid sub_grid(const ExerciseBoundary& b, double t, Eigen::Index row) {
    const Eigen::VectorXd fine = refine_grid(b.times, b.substeps);
    const int S = b.substeps;
    std::vector<double> u{t}, xb{b.at(t, row)}, mu{0.0};
    std::vector<Eigen::Index> coarse{0};
    bool on_grid = false;
    for (Eigen::Index j = 0; j < fine.size(); ++j) {
        if (std::abs(fine[j] - t) <= 1e-12) {
            on_grid = true;
            continue;
        }
        if (fine[j] < t) continue;
        Eigen::Index c = std::min<Eigen::Index>(j / S, b.times.size() - 1);
        double l = static_cast<double>(j - c * S) / S;
        u.push_back(fine[j]);
        xb.push_back(l == 0.0 ? b.values(row, c) : b.at(fine[j], row));
        coarse.push_back(c);
        mu.push_back(boundary_interpolation_weight(l, c + 2 == b.times.size()));
    }
    SubGrid g;
    const auto n = static_cast<Eigen::Index>(u.size());
    g.u = Eigen::Map<Eigen::VectorXd>(u.data(), n);
    g.xb = Eigen::Map<Eigen::VectorXd>(xb.data(), n);
    g.coarse = std::move(coarse);
    g.mu = std::move(mu);
    // Simpson needs a uniform grid; an off-grid start falls back to the trapezoid rule.
    g.w = on_grid ? quadrature_weights(g.u, b.rule) : trapezoid_weights(g.u);
    return g;
}

/// Sum_j c_j dX_B(u_j) with node sensitivities Y interpolated like the boundary.
double along_boundary(const SubGrid& g, const Eigen::VectorXd& c, const Eigen::VectorXd& Y) {
    double s = 0.0;
    for (Eigen::Index j = 1; j < g.u.size(); ++j) {
        if (c[j] == 0.0) continue;
        const Eigen::Index k = g.coarse[j];
        const double l = g.mu[j];
        s += c[j] * (l == 0.0 ? Y[k] : (1 - l) * Y[k] + l * Y[k + 1]);
    }
    return s;
}

/// Premium integrand sum with requested sensitivities; x in continuation.
struct EepSens {
    ValueSens v;
    Eigen::VectorXd dxb;  // d(EEP)/d X_B(u_j) per sub-grid node
};

EepSens eep_sum(const VolterraSystem& sys, const SubGrid& g, double t, double x, unsigned flags) {
    const TransitionKernel& k = sys.kernel();
    const Contract& c = sys.contract();
    const Curve& r = k.rate();
    const Curve& q = k.dividend();
    const double K = c.strike, rt = r(t);
    const double s = c.kind == OptionKind::put ? 1.0 : -1.0;
    EepSens out;
    out.dxb = Eigen::VectorXd::Zero(g.u.size());
    for (Eigen::Index j = 1; j < g.u.size(); ++j) {
        const double u = g.u[j], xb = g.xb[j];
        if (!sys.active(u, xb)) continue;
        const auto [lo, hi] = sys.region(xb);
        const MomentSens m = k.moments(t, u, x, lo, hi, flags);
        const double ru = r(u), qu = q(u);
        const double wd = g.w[j] * discount_factor(r, t, u);
        auto h = [&](const Moments& mm) { return s * (ru * K * mm.m0 - qu * mm.m1); };
        const double hv = h(m.value);
        out.v.value += wd * hv;
        out.v.dx += wd * h(m.dx);
        out.v.dxx += wd * h(m.dxx);
        out.v.dt += wd * (rt * hv + h(m.dt));
        out.v.dscale += wd * h(m.dscale);
        if (flags & kSpace) {
            // Moving the region endpoint adds or removes H(u, X_B) psi(X_B).
            const double dens = c.kind == OptionKind::put ? m.density_hi : m.density_lo;
            out.dxb[j] = wd * sys.H(u, xb) * dens;
        }
    }
    return out;
}

PricingResult exercise_result(const Contract& c, double x) {
    PricingResult p;
    p.region = Region::exercise;
    p.american = c.kind == OptionKind::put ? c.strike - x : x - c.strike;
    return p;
}

}  // namespace

PricingResult price_american(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                             const Contract& contract, double t, double x, Eigen::Index row) {
    contract.validate();
    check_coverage(boundary, contract, t);
    const double xb = boundary.at(t, row);
    if (in_exercise(contract, x, xb)) return exercise_result(contract, x);
    VolterraSystem sys(kernel, contract, boundary.times);
    PricingResult p;
    p.european = sys.european(t, x).value;
    if (t < contract.maturity) {
        const SubGrid g = sub_grid(boundary, t, row);
        p.eep = eep_sum(sys, g, t, x, kValueOnly).v.value;
    }
    p.american = p.european + p.eep;
    return p;
}

PricingResult price_american_put(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                                 const Contract& contract, double t, double x, Eigen::Index row) {
    if (contract.kind != OptionKind::put) throw ValidationError("price_american_put: contract is a call");
    return price_american(kernel, boundary, contract, t, x, row);
}

PricingResult price_american_call(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                                  const Contract& contract, double t, double x, Eigen::Index row) {
    if (contract.kind != OptionKind::call) throw ValidationError("price_american_call: contract is a put");
    return price_american(kernel, boundary, contract, t, x, row);
}

DeltaGamma greek_delta_gamma(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                             const Contract& contract, double t, double x, Eigen::Index row) {
    check_coverage(boundary, contract, t);
    const double xb = boundary.at(t, row);
    const double sign = contract.kind == OptionKind::put ? -1.0 : 1.0;
    const bool near = std::isfinite(xb) && std::abs(x - xb) < 1e-6 * contract.strike;
    if (in_exercise(contract, x, xb) || near) return {sign, 0.0, near};
    VolterraSystem sys(kernel, contract, boundary.times);
    const ValueSens e = sys.european(t, x, kSpace);
    DeltaGamma dg{e.dx, e.dxx, false};
    if (t < contract.maturity) {
        const EepSens s = eep_sum(sys, sub_grid(boundary, t, row), t, x, kSpace);
        dg.delta += s.v.dx;
        dg.gamma += s.v.dxx;
    }
    return dg;
}

double greek_theta(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                   const Contract& contract, double t, double x, Eigen::Index row) {
    check_coverage(boundary, contract, t);
    const double xb = boundary.at(t, row);
    if (in_exercise(contract, x, xb) || t >= contract.maturity) return 0.0;
    VolterraSystem sys(kernel, contract, boundary.times);
    const double e = sys.european(t, x, kTime).dt;
    return e + eep_sum(sys, sub_grid(boundary, t, row), t, x, kTime).v.dt;
}

Eigen::VectorXd boundary_scale_sensitivity(const TransitionKernel& kernel,
                                           const ExerciseBoundary& boundary,
                                           const Contract& contract, Eigen::Index row) {
    check_coverage(boundary, contract, boundary.times[0]);
    VolterraSystem sys(kernel, contract, boundary.times);
    const Eigen::Index n = boundary.times.size();
    const Eigen::VectorXd b = boundary.row(row);
    const bool put = contract.kind == OptionKind::put;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    A(n - 1, n - 1) = 1.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const bool solved = std::isfinite(b[i]) && (!put || b[i] > 0.0);
        if (!solved) {
            A(i, i) = 1.0;
            continue;
        }
        const double t = boundary.times[i];
        const SubGrid g = sub_grid(boundary, t, row);
        const ValueSens e = sys.european(t, b[i], kSpace | kScale);
        const EepSens s = eep_sum(sys, g, t, b[i], kSpace | kScale);
        const double dpay = put ? -1.0 : 1.0;
        const double hx = sys.H(t, b[i]) > 0.0 ? (put ? -1.0 : 1.0) * kernel.dividend()(t) : 0.0;
        A(i, i) = dpay - e.dx - s.v.dx - 0.5 * g.w[0] * hx;
        for (Eigen::Index j = 1; j < g.u.size(); ++j) {
            const Eigen::Index k = g.coarse[j];
            const double l = g.mu[j];
            A(i, k) -= (1 - l) * s.dxb[j];
            if (l > 0.0) A(i, k + 1) -= l * s.dxb[j];
        }
        rhs[i] = e.dscale + s.v.dscale;
    }
    const Eigen::VectorXd diag = A.diagonal().cwiseAbs();
    const double cond = diag.maxCoeff() / std::max(diag.minCoeff(), 1e-300);
    if (!(diag.minCoeff() > 1e-14 * diag.maxCoeff())) {
        std::ostringstream os;
        os << "boundary sensitivity: singular triangular system (diagonal ratio " << cond << ")";
        throw NumericalError(os.str());
    }
    return A.triangularView<Eigen::Upper>().solve(rhs);
}

double greek_vega_fredholm(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                           const Contract& contract, double t, double x, Eigen::Index row) {
    check_coverage(boundary, contract, t);
    const double xb = boundary.at(t, row);
    if (in_exercise(contract, x, xb)) return 0.0;
    VolterraSystem sys(kernel, contract, boundary.times);
    double vega = sys.european(t, x, kScale).dscale;
    if (t >= contract.maturity) return vega;
    const SubGrid g = sub_grid(boundary, t, row);
    const EepSens s = eep_sum(sys, g, t, x, kSpace | kScale);
    vega += s.v.dscale;
    if (s.dxb.cwiseAbs().maxCoeff() > 0.0) {
        const Eigen::VectorXd Y = boundary_scale_sensitivity(kernel, boundary, contract, row);
        vega += along_boundary(g, s.dxb, Y);
    }
    return vega;
}

PricingResult price_with_greeks(const TransitionKernel& kernel, const ExerciseBoundary& boundary,
                                const Contract& contract, double t, double x, Eigen::Index row) {
    PricingResult p = price_american(kernel, boundary, contract, t, x, row);
    Greeks gk;
    const DeltaGamma dg = greek_delta_gamma(kernel, boundary, contract, t, x, row);
    gk.delta = dg.delta;
    gk.gamma = dg.gamma;
    gk.near_boundary = dg.near_boundary;
    if (p.region == Region::continuation && !dg.near_boundary) {
        gk.theta = greek_theta(kernel, boundary, contract, t, x, row);
        gk.vega = greek_vega_fredholm(kernel, boundary, contract, t, x, row);
    }
    p.greeks = gk;
    return p;
}

}  // namespace eeb

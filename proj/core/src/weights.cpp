#include "stocnull/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "stocnull/errors.hpp"

namespace stocnull {

namespace {

constexpr int kPsiSamples = 4001;

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

CarlemanWeights::CarlemanWeights(const WeightParams& params) : params_(params) {
    // psi is a downward parabola: its sup over G~ is at x0 (if inside) or an endpoint.
    const Interval& g = params_.extended;
    double sup = std::max(std::abs(psi(g.lo)), std::abs(psi(g.hi)));
    if (g.contains(params_.x0)) sup = std::max(sup, std::abs(psi(params_.x0)));
    psi_sup_ = sup;
    phi_shift_ = std::exp(2.0 * params_.mu * psi_sup_);
}

CarlemanWeights CarlemanWeights::build(const WeightParams& p) {
    if (!(p.T > 0.0)) throw InvalidArgument("weights: T must be positive, got " + fmt(p.T));
    if (!(p.lambda > 1.0)) throw InvalidArgument("weights: lambda must exceed 1, got " + fmt(p.lambda));
    if (!(p.mu > 1.0)) throw InvalidArgument("weights: mu must exceed 1, got " + fmt(p.mu));
    if (!(p.delta > 0.0 && p.delta < 0.5)) {
        throw InvalidArgument("weights: delta must lie in (0, 1/2), got " + fmt(p.delta));
    }
    if (!(p.eps0 > 0.0 && p.eps0 <= 1.0)) throw InvalidArgument("weights: eps0 must lie in (0, 1], got " + fmt(p.eps0));
    if (!p.extended.valid() || !(p.extended.lo < 0.0 && p.extended.hi > 1.0)) {
        throw InvalidArgument("weights: extended interval must strictly contain [0, 1]");
    }

    CarlemanWeights w(p);

    const Interval& g = p.extended;
    for (int k = 1; k < kPsiSamples; ++k) {
        const double x = g.lo + (g.hi - g.lo) * k / kPsiSamples;
        if (!(w.psi(x) > 0.0)) {
            throw InvalidWeightConfiguration("psi > 0 on extended interval", "psi(" + fmt(x) + ") = " + fmt(w.psi(x)));
        }
    }
    if (!(w.dpsi(0.0) > 0.0)) throw InvalidWeightConfiguration("psi'(0) > 0", "psi'(0) = " + fmt(w.dpsi(0.0)));
    if (!(w.dpsi(1.0) < 0.0)) throw InvalidWeightConfiguration("psi'(1) < 0", "psi'(1) = " + fmt(w.dpsi(1.0)));
    if (!p.omega0.contains(p.x0)) {
        // psi' vanishes only at x0
        throw InvalidWeightConfiguration("|psi'| > 0 outside omega0",
                                         "psi'(" + fmt(p.x0) + ") = 0 with x0 outside omega0");
    }
    for (int k = 1; k < kPsiSamples; ++k) {
        const double x = g.lo + (g.hi - g.lo) * k / kPsiSamples;
        if (!p.omega0.contains(x) && !(std::abs(w.dpsi(x)) > 0.0)) {
            throw InvalidWeightConfiguration("|psi'| > 0 outside omega0", "psi'(" + fmt(x) + ") = 0");
        }
    }
    if (!p.omega.valid() || !p.omega0.valid() || !p.omega.contains_closure_of(p.omega0) || p.omega.lo < 0.0 ||
        p.omega.hi > 1.0) {
        throw InvalidArgument("weights: need closure(omega0) inside omega inside (0, 1)");
    }
    return w;
}

double CarlemanWeights::psi(double x) const noexcept {
    const double d = x - params_.x0;
    return params_.K - d * d;
}

double CarlemanWeights::dpsi(double x) const noexcept { return -2.0 * (x - params_.x0); }

double CarlemanWeights::phi(double x) const noexcept { return std::exp(params_.mu * psi(x)) - phi_shift_; }

double CarlemanWeights::varphi(double x) const noexcept { return std::exp(params_.mu * psi(x)); }

double CarlemanWeights::theta(double t) const {
    const double T = params_.T;
    if (!(t >= 0.0 && t <= T)) throw InvalidArgument("theta: t=" + fmt(t) + " outside [0, T]");
    const double dT = params_.delta * T;
    return 1.0 / ((t + dT) * (T + dT - t));
}

double CarlemanWeights::r(double t, double x) const { return std::exp(log_r(t, x)); }

double CarlemanWeights::rho(double t, double x) const { return std::exp(-log_r(t, x)); }

RegimeDecision validate_regime(const CarlemanWeights& weights, double h) {
    const WeightParams& p = weights.params();
    RegimeDecision d;
    d.ratio = p.lambda * h / (p.delta * p.T * p.T);
    // Relative slack so that delta taken from the schedule is not rejected by one ulp.
    d.accepted = d.ratio <= p.eps0 * (1.0 + 1e-12);
    return d;
}

double schedule_threshold(double eps0, double delta0, double T, double lambda) {
    return eps0 * delta0 * T * T / lambda;
}

double delta_schedule(double h, double h1, double delta0) {
    if (!(h > 0.0)) throw InvalidArgument("delta_schedule: h must be positive");
    if (h > h1) throw InvalidArgument("delta_schedule: h=" + fmt(h) + " exceeds h1=" + fmt(h1));
    if (!(delta0 > 0.0 && delta0 < 0.5)) throw InvalidArgument("delta_schedule: delta0 must lie in (0, 1/2)");
    return (h / h1) * delta0;
}

ScalingProbe weight_scaling_probe(const CarlemanWeights& weights, const Mesh& mesh, int time_samples) {
    if (time_samples < 2) throw InvalidArgument("weight_scaling_probe: need at least 2 time samples");
    const double T = weights.params().T;
    const double h = mesh.spacing();
    ScalingProbe probe;
    for (int k = 0; k < time_samples; ++k) {
        const double t = T * k / (time_samples - 1);
        const double s = weights.s(t);
        probe.max_sh = std::max(probe.max_sh, s * h);
        for (int i = 1; i <= mesh.interior_count(); ++i) {
            const double x = mesh.point(i);
            const double c = weights.log_r(t, x);
            // r(x) rho(x +- h) = exp(s phi(x) - s phi(x +- h))
            const double ratio_p = std::exp(c - weights.log_r(t, x + h));
            const double ratio_m = std::exp(c - weights.log_r(t, x - h));
            const double r_d2_rho = (ratio_p - 2.0 + ratio_m) / (h * h);
            const double r_a2_rho = 0.25 * (ratio_m + 2.0 + ratio_p);
            const double r_ad_rho = (ratio_p - ratio_m) / (2.0 * h);
            probe.second_difference_over_s2 = std::max(probe.second_difference_over_s2, std::abs(r_d2_rho) / (s * s));
            probe.mixed_average_over_s = std::max(probe.mixed_average_over_s, std::abs(r_a2_rho * r_ad_rho) / s);
        }
    }
    return probe;
}

}  // namespace stocnull

#pragma once

#include "stocnull/mesh.hpp"

namespace stocnull {

struct WeightParams {
    double T = 1.0;
    double lambda = 2.0;
    double mu = 1.5;
    double delta = 0.25;
    double x0 = 0.5;       // critical point of psi
    double K = 2.0;        // additive level of psi
    double eps0 = 1.0;     // regime threshold
    Interval omega{0.3, 0.7};
    Interval omega0{0.4, 0.6};
    Interval extended{-0.1, 1.1};  // neighbourhood of [0, 1] on which psi is checked
};

/**
 * Carleman weight family built on psi(x) = K - (x - x0)^2:
 *
 *   phi(x)    = exp(mu psi(x)) - exp(2 mu |psi|_inf)
 *   varphi(x) = exp(mu psi(x))
 *   theta(t)  = 1 / ((t + delta T)(T + delta T - t)),  s(t) = lambda theta(t)
 *   r(t, x)   = exp(s(t) phi(x)),  rho = 1 / r
 *
 * phi < 0 everywhere, so r lies in (0, 1). For realistic parameters r
 * underflows; callers needing magnitudes should work with log_r.
 */
class CarlemanWeights {
public:
    // Throws InvalidArgument for out-of-range parameters and
    // InvalidWeightConfiguration naming the first psi condition that fails.
    static CarlemanWeights build(const WeightParams& params);

    const WeightParams& params() const noexcept { return params_; }

    double psi(double x) const noexcept;
    double dpsi(double x) const noexcept;
    double psi_sup() const noexcept { return psi_sup_; }
    double phi(double x) const noexcept;
    double varphi(double x) const noexcept;

    // Throws InvalidArgument outside [0, T].
    double theta(double t) const;
    double s(double t) const { return params_.lambda * theta(t); }

    double log_r(double t, double x) const { return s(t) * phi(x); }
    double r(double t, double x) const;
    double rho(double t, double x) const;

private:
    explicit CarlemanWeights(const WeightParams& params);

    WeightParams params_;
    double psi_sup_ = 0.0;
    double phi_shift_ = 0.0;  // exp(2 mu |psi|_inf)
};

inline double theta(const CarlemanWeights& w, double t) { return w.theta(t); }

struct RegimeDecision {
    bool accepted = false;
    double ratio = 0.0;  // lambda h / (delta T^2)
};

// Accepts iff lambda h (delta T^2)^{-1} <= eps0.
RegimeDecision validate_regime(const CarlemanWeights& weights, double h);

// h1 = eps0 delta0 T^2 / lambda: the largest h for which delta = delta0 keeps
// the regime ratio at eps0.
double schedule_threshold(double eps0, double delta0, double T, double lambda);

// delta = (h / h1) delta0. Throws InvalidArgument unless 0 < h <= h1 and
// 0 < delta0 < 1/2.
double delta_schedule(double h, double h1, double delta0);

// Size of the discrete weight derivatives relative to their expected power of s.
struct ScalingProbe {
    double second_difference_over_s2 = 0.0;  // max |r D_h^2 rho| / s^2
    double mixed_average_over_s = 0.0;       // max |r^2 A_h^2 rho A_h D_h rho| / s
    double max_sh = 0.0;                     // max s(t) h over the sampled times
};

// Evaluates the probes at interior mesh points and `time_samples` equispaced
// times in [0, T]. Uses differences of s phi so nothing overflows.
ScalingProbe weight_scaling_probe(const CarlemanWeights& weights, const Mesh& mesh, int time_samples);

}  // namespace stocnull

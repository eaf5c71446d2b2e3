#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stocnull/backward_solver.hpp"
#include "stocnull/forward_solver.hpp"
#include "stocnull/hum.hpp"
#include "stocnull/noise_tree.hpp"
#include "stocnull/weights.hpp"

namespace stocnull {

/**
 * Sum of nonnegative terms kept as log(sum). Carleman weights exp(2 s phi)
 * leave the double range for any useful s, so every weighted integral is
 * accumulated in log space.
 */
class LogSum {
public:
    void add_log(double log_term) noexcept;
    void add(const LogSum& other) noexcept;

    // -inf for an empty (zero) sum.
    double log() const noexcept;
    // May underflow to 0 or overflow to inf; use log() for ratios.
    double value() const noexcept;
    bool zero() const noexcept { return scaled_ == 0.0; }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double scaled_ = 0.0;
};

// Drift and diffusion sources of dw + D_h^2 w dt = f dt + g dB.
struct SourcePair {
    AdaptedField f;  // per-step
    AdaptedField g;  // per-step
};

struct WSolution {
    AdaptedField w;  // levels 0 .. depth
    SourcePair sources;
};

// Solves the w-equation backward from w_T with drift source f; g is the
// martingale integrand produced by the tree (homogeneous Dirichlet data).
WSolution solve_w_equation(const LevelField& wT, const AdaptedField& f, const ScenarioTree& tree, const Mesh& mesh);

/**
 * Weighted integrals of the Carleman inequality, each a tree expectation of a
 * left-endpoint time quadrature of mesh integrals.
 */
struct CarlemanTerms {
    LogSum state;      // E int_Q s^3 e^{2 s phi} w^2
    LogSum gradient;   // E int_Q* s e^{2 s phi} |D_h w|^2
    LogSum observed;   // E int int_{omega n M} s^3 e^{2 s phi} w^2
    LogSum diffusion;  // E int_Q s^2 e^{2 s phi} g^2
    LogSum drift;      // E int_Q e^{2 s phi} f^2
    LogSum initial;    // h^-2 E int_M e^{2 s phi} w^2 at t = 0
    LogSum terminal;   // h^-2 E int_M e^{2 s phi} w^2 at t = T

    LogSum lhs() const;
    LogSum rhs() const;
    // LHS / RHS (without the constant); 0 when both sides vanish.
    double ratio() const;
};

// Throws InvalidArgument (message carries the ratio) when the regime check
// fails for this mesh.
CarlemanTerms carleman_terms(const AdaptedField& w, const SourcePair& sources, const CarlemanWeights& weights,
                             const Region& region, const ScenarioTree& tree, const Mesh& mesh);

struct CarlemanStudy {
    int samples = 0;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    std::vector<double> ratios;
};

// Random (w_T, f) pairs, per-sample seeds derived from `seed`.
CarlemanStudy carleman_study(const CarlemanWeights& weights, const Region& region, const ScenarioTree& tree,
                             const Mesh& mesh, int samples, std::uint64_t seed);

struct ObservabilityRecord {
    double lhs = 0.0;        // E |z(0)|^2
    double diffusion = 0.0;  // E int_Q |Z|^2
    double observed = 0.0;   // E int int_{omega n M} |zeta|^2
    double terminal = 0.0;   // E |z_T|^2

    // C-free right-hand side with terminal weight kappa.
    double rhs(double kappa) const noexcept { return diffusion + observed + kappa * terminal; }
};

/**
 * Empirical observability constant. The fitted C is the largest value of
 * LHS / RHS over the linear span of the training sample (a generalized
 * symmetric eigenproblem on the sample Gram matrices); it is never below the
 * largest per-sample ratio, which is reported separately. Holdout samples are
 * then checked against the fitted C.
 */
struct FittedConstant {
    int train = 0;
    int holdout = 0;
    int excluded = 0;  // zero samples (0 <= C * 0)
    double kappa = 0.0;     // exp(-C_eps / h)
    double kappa_h2 = 0.0;  // h^-2 exp(-C_eps / h)

    double c = 0.0;  // span fit, terminal weight kappa
    double c_sample_max = 0.0;
    int holdout_violations = 0;
    double holdout_max_ratio = 0.0;

    double c_h2 = 0.0;  // same with terminal weight kappa_h2
    double c_h2_sample_max = 0.0;
    int holdout_violations_h2 = 0;

    std::vector<ObservabilityRecord> train_records;
    std::vector<ObservabilityRecord> holdout_records;
};

ObservabilityRecord observability_record(const LevelField& zT, const Coefficients& coeffs, const Region& region,
                                         const ScenarioTree& tree, const Mesh& mesh);

FittedConstant observability_sample(const std::vector<LevelField>& train, const std::vector<LevelField>& holdout,
                                    const Coefficients& coeffs, const Region& region, const ScenarioTree& tree,
                                    const Mesh& mesh, double c_eps);

// Gaussian terminal data, sample i drawn from derive_seed(seed, i).
std::vector<LevelField> random_terminal_family(const ScenarioTree& tree, const Mesh& mesh, int count,
                                               std::uint64_t seed, std::uint64_t first_index = 0);

struct SweepSettings {
    std::vector<double> h_values;
    int depth = 8;
    int max_depth = ScenarioTree::kDefaultMaxDepth;
    double T = 1.0;
    Interval omega{0.3, 0.7};
    Interval omega0{0.4, 0.6};
    CoefficientKind coefficient_kind = CoefficientKind::constant;
    double a1 = 0.5;
    double a2 = 0.5;
    InitialProfile initial;
    double lambda = 2.0;
    double mu = 1.5;
    double delta0 = 0.4;
    double x0 = 0.5;
    double K = 2.0;
    double eps0 = 1.0;
    double c_eps = 1.0;
    double cg_tol = 1e-10;
    int cg_maxiter = 500;
    int obs_train = 20;
    int obs_holdout = 20;
    std::uint64_t seed = 0;
};

struct SweepRow {
    double h = 0.0;
    double delta = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    int N = 0;
    int depth = 0;
    double eps = 0.0;
    double obs_C = 0.0;
    double term_ratio = 0.0;
    double cost_ratio = 0.0;
    int cg_iters = 0;
    double closure_err = 0.0;
    bool skipped = false;
    bool numerical_failure = false;
    std::string reason;
};

// One row per h: delta from the schedule, eps = exp(-C_eps / h), HUM solve
// and an observability fit at that resolution.
std::vector<SweepRow> h_sweep(const SweepSettings& settings);

// Least-squares slope of log(term_ratio) against 1/h over non-skipped rows.
double decay_slope(const std::vector<SweepRow>& rows);

}  // namespace stocnull

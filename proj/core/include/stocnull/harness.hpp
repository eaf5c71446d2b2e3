#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stocnull/forward_solver.hpp"
#include "stocnull/hum.hpp"
#include "stocnull/inequalities.hpp"
#include "stocnull/mesh.hpp"

namespace stocnull {

/**
 * Experiment configuration. JSON layout:
 *
 *   mesh.N, tree.{depth, T, max_depth}, omega, omega0 ([lo, hi]),
 *   coefficients.{kind, a1, a2}, initial_state.{kind, mode, amplitude},
 *   weights.{lambda, mu, delta0, x0, K, eps0, C_eps},
 *   hum.{cg_tol, cg_maxiter, epsilon?}, observability.{train, holdout},
 *   carleman.{samples}, sweep.{h, train, holdout}, seed, output
 *
 * Every key is optional; unknown keys are rejected.
 */
struct ExperimentConfig {
    int N = 8;
    int depth = 8;
    double T = 1.0;
    int max_depth = ScenarioTree::kDefaultMaxDepth;
    Interval omega{0.3, 0.7};
    Interval omega0{0.4, 0.6};

    CoefficientKind coefficient_kind = CoefficientKind::constant;
    double a1 = 0.5;
    double a2 = 0.5;

    InitialKind initial_kind = InitialKind::sine;
    int initial_mode = 1;
    double initial_amplitude = 1.0;

    double lambda = 2.0;
    double mu = 1.5;
    double delta0 = 0.4;
    std::optional<double> x0;  // midpoint of omega0 when absent
    double K = 2.0;
    double eps0 = 1.0;
    double c_eps = 0.6;

    double cg_tol = 1e-10;
    int cg_maxiter = 500;
    std::optional<double> epsilon;  // overrides exp(-C_eps / h)

    int obs_train = 200;
    int obs_holdout = 200;
    int carleman_samples = 100;

    std::vector<double> sweep_h{1.0 / 8, 1.0 / 12, 1.0 / 16, 1.0 / 20};
    int sweep_train = 20;
    int sweep_holdout = 20;

    std::uint64_t seed = 0;
    std::string output;

    double weight_center() const noexcept { return x0 ? *x0 : 0.5 * (omega0.lo + omega0.hi); }
    bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError listing every violated constraint.
ExperimentConfig parse_config(const std::string& json_text);
// Missing or unreadable files are reported as ConfigError too.
ExperimentConfig load_config(const std::string& path);
// Pretty-printed JSON with every field; parse_config(to_json(c)) == c.
std::string to_json(const ExperimentConfig& config);
// Returns the violations (empty when valid).
std::vector<std::string> validate_config(const ExperimentConfig& config);

SweepSettings to_sweep_settings(const ExperimentConfig& config);
HumProblem make_hum_problem(const ExperimentConfig& config);
// Weights on the configured mesh with delta from the schedule.
CarlemanWeights make_weights(const ExperimentConfig& config, double h);

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct RunReport {
    std::string title;
    std::vector<std::string> lines;  // informational "key: value" lines
    std::vector<CheckResult> checks;

    int failures() const noexcept;
    bool passed() const noexcept { return failures() == 0; }
    std::string text() const;
};

// Mesh / calculus / tree / duality property checks.
RunReport run_identity_suite(const ExperimentConfig& config);
// One penalized HUM solve with closure and cost diagnostics.
RunReport run_hum_report(const ExperimentConfig& config);
// Train / holdout fit of the observability constant.
RunReport run_observability(const ExperimentConfig& config);
// Carleman ratio study on the configured mesh and one refinement.
RunReport run_carleman(const ExperimentConfig& config);

struct SweepReport {
    RunReport report;
    std::vector<SweepRow> rows;
};
SweepReport run_sweep(const ExperimentConfig& config);

// Header plus one line per row, LF endings, shortest round-trip numbers.
std::string format_csv(const std::vector<SweepRow>& rows);
// Throws IoError when the file cannot be written.
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace stocnull

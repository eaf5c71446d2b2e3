#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stocnull/backward_solver.hpp"
#include "stocnull/discrete_calc.hpp"
#include "stocnull/forward_solver.hpp"
#include "stocnull/noise_tree.hpp"

namespace stocnull {

struct HumProblem {
    Mesh mesh;
    ScenarioTree tree;
    Coefficients coeffs;
    Region region;
    GridFunction y0;
    double epsilon = 1e-3;
    double cg_tol = 1e-10;
    int cg_maxiter = 500;
};

// epsilon = exp(-C_eps / h)
double epsilon_from_rate(double c_eps, double h);

// Throws InvalidArgument when epsilon <= 0, the region misses every mesh
// point, or the pieces disagree on N / depth.
void validate(const HumProblem& problem);

/**
 * Lambda z_T = y(T; 0, chi zeta, Z) where (z, zeta, Z) solves the backward
 * equation from z_T. Self-adjoint and positive semidefinite in E<.,.>_M.
 */
LevelField gramian_apply(const LevelField& zT, const HumProblem& problem);
LevelField gramian_apply(const LevelField& zT, const Coefficients& coeffs, const Region& region,
                         const ScenarioTree& tree, const Mesh& mesh);

enum class InitialKind { sine, random };

// Initial state family: amplitude sin(mode pi x), or seeded Gaussian values
// of standard deviation `amplitude` at interior points.
struct InitialProfile {
    InitialKind kind = InitialKind::sine;
    int mode = 1;
    double amplitude = 1.0;
    std::uint64_t seed = 0;
};

GridFunction make_initial_state(const Mesh& mesh, const InitialProfile& profile);

struct CgResult {
    LevelField solution;
    std::vector<double> history;  // relative residual after each iteration
    int iterations = 0;
    double relative_residual = 0.0;
    double rhs_norm = 0.0;
};

// Plain CG for a self-adjoint positive definite operator in E<.,.>_M.
// Throws ConvergenceFailure when tol is not reached within maxiter.
CgResult conjugate_gradient(const std::function<LevelField(const LevelField&)>& apply, const LevelField& rhs,
                            double h, double tol, int maxiter);

struct HumDiagnostics {
    double J = 0.0;
    std::vector<double> residual_history;
    int cg_iterations = 0;
    double cg_residual = 0.0;  // relative
    double rhs_norm = 0.0;     // sqrt(E |y_free(T)|^2)
    double closure_error = 0.0;  // sqrt(E |y(T) - eps z_T*|^2)
};

struct HumSolution {
    LevelField zT_star;
    BackwardSolution backward;
    ControlPair controls;  // u* = -chi zeta*, v* = -Z*
    LevelField yT;
    HumDiagnostics diagnostics;
};

// Solves (Lambda + eps I) z_T = y_free(T) by CG, synthesizes the controls and
// reruns the forward system with them.
HumSolution solve_hum(const HumProblem& problem);

// J(z_T) = 1/2 sum dt E|Z|^2 + 1/2 sum dt E|chi zeta|^2 + eps/2 E|z_T|^2 - <y0, z(0)>
double evaluate_J(const LevelField& zT, const HumProblem& problem);
// eps z_T - y(T; y0, -chi zeta, -Z)
LevelField gradient_J(const LevelField& zT, const HumProblem& problem);

struct BoundsReport {
    double y0_energy = 0.0;        // E |y0|^2
    double control_cost = 0.0;     // E int |v*|^2 + E int_omega |u*|^2
    double cost_ratio = 0.0;       // control_cost / y0_energy
    double terminal_energy = 0.0;  // E |y(T)|^2
    double terminal_ratio = 0.0;   // terminal_energy / y0_energy
    double terminal_over_eps_ratio = 0.0;  // terminal_energy / (eps y0_energy)
    double zT_energy = 0.0;        // E |z_T*|^2
};

// Ratios are 0 when y0 vanishes.
BoundsReport report_bounds(const HumSolution& solution, const HumProblem& problem);

}  // namespace stocnull

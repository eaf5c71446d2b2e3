#pragma once

#include <span>

#include "stocnull/discrete_calc.hpp"
#include "stocnull/forward_solver.hpp"
#include "stocnull/noise_tree.hpp"

namespace stocnull {

/**
 * Solution of the backward equation on the tree.
 *
 * For each step k and node n with children c-, c+:
 *   w_c    = M_n^{-T} z_{k+1}(c)            (M_n = I - dt (D_h^2 + a1))
 *   zeta_k = (w_+ + w_-) / 2,  Z_k = (w_+ - w_-) / (2 sqrt(dt))
 *   z_k    = zeta_k + dt a2 Z_k - dt f_k
 *
 * This is the transpose of the forward step in E<.,.>_M, so (zeta, Z) are
 * exactly the pairings of the drift and diffusion controls.
 */
struct BackwardSolution {
    AdaptedField z;     // levels 0 .. depth, z at the last level is z_T
    AdaptedField zeta;  // levels 0 .. depth - 1
    AdaptedField Z;     // levels 0 .. depth - 1

    std::span<const double> z0() const noexcept { return z.node(0, 0); }
    GridFunction z0(const Mesh& mesh) const { return GridFunction::from_interior(mesh, z0()); }
};

struct BackwardStep {
    std::vector<double> z;
    std::vector<double> zeta;
    std::vector<double> Z;
};

// Interior values of the two children in, one node's (z, zeta, Z) out.
BackwardStep backward_step(std::span<const double> z_minus, std::span<const double> z_plus, std::span<const double> a1,
                           std::span<const double> a2, double dt, const Mesh& mesh);

// `source`, when given, is a per-step field f entering as dz + D_h^2 z dt = (f - a1 z - a2 Z) dt + Z dB.
BackwardSolution solve_backward(const LevelField& zT, const Coefficients& coeffs, const ScenarioTree& tree,
                                const Mesh& mesh, const AdaptedField* source = nullptr);

/**
 * Both sides of the discrete duality identity
 *   E<y(T), z_T> - <y0, z(0)> = sum_k dt E<chi u_k, zeta_k> + sum_k dt E<v_k, Z_k>.
 */
struct DualityBalance {
    double terminal = 0.0;   // E<y(T), z_T>
    double initial = 0.0;    // <y0, z(0)>
    double drift = 0.0;      // sum_k dt E<chi u_k, zeta_k>
    double diffusion = 0.0;  // sum_k dt E<v_k, Z_k>

    double residual() const noexcept { return (terminal - initial) - (drift + diffusion); }
    // Residual over the largest magnitude among the four terms.
    double relative_residual() const noexcept;
};

DualityBalance duality_balance(const GridFunction& y0, const ControlPair& controls, const ForwardSolution& forward,
                               const BackwardSolution& backward, const ScenarioTree& tree, const Mesh& mesh);

}  // namespace stocnull

#include "stocnull/backward_solver.hpp"

#include <algorithm>
#include <cmath>

#include "stocnull/errors.hpp"
#include "stocnull/parallel.hpp"

namespace stocnull {

BackwardStep backward_step(std::span<const double> z_minus, std::span<const double> z_plus, std::span<const double> a1,
                           std::span<const double> a2, double dt, const Mesh& mesh) {
    double a1_sup = 0.0;
    for (double v : a1) a1_sup = std::max(a1_sup, std::abs(v));
    if (!(dt * a1_sup < 1.0)) throw InvalidArgument("backward_step: dt*|a1|_inf must be below 1");

    const std::size_t n = z_minus.size();
    const ImplicitDriftOperator op(mesh, dt, a1);
    std::vector<double> w_minus(n), w_plus(n);
    op.solve_transposed(z_minus, w_minus);
    op.solve_transposed(z_plus, w_plus);

    BackwardStep step{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    martingale_coeff(w_plus, w_minus, dt, step.zeta, step.Z);
    for (std::size_t i = 0; i < n; ++i) step.z[i] = step.zeta[i] + dt * a2[i] * step.Z[i];
    return step;
}

BackwardSolution solve_backward(const LevelField& zT, const Coefficients& coeffs, const ScenarioTree& tree,
                                const Mesh& mesh, const AdaptedField* source) {
    const int n = mesh.interior_count();
    if (zT.level() != tree.depth() || zT.width() != n) {
        throw InvalidArgument("solve_backward: terminal data must live on the leaves with N values per leaf");
    }
    if (source && (source->width() != n || source->level_count() < tree.depth())) {
        throw InvalidArgument("solve_backward: source must be a per-step field");
    }
    check_dominance(coeffs, tree);
    const double dt = tree.dt();

    BackwardSolution sol{AdaptedField::state(tree, n), AdaptedField::per_step(tree, n),
                         AdaptedField::per_step(tree, n)};
    sol.z.set_level(zT);

    for (int k = tree.depth() - 1; k >= 0; --k) {
        parallel_for(ScenarioTree::node_count(k), [&](std::size_t begin, std::size_t end) {
            ImplicitDriftOperator op;
            std::vector<double> w_minus(static_cast<std::size_t>(n)), w_plus(w_minus.size());
            for (std::size_t node = begin; node < end; ++node) {
                op.reset(mesh, dt, coeffs.a1(k, node));
                op.solve_transposed(sol.z.node(k + 1, ScenarioTree::child(node, 0)), w_minus);
                op.solve_transposed(sol.z.node(k + 1, ScenarioTree::child(node, 1)), w_plus);
                const auto zeta = sol.zeta.node(k, node);
                const auto Z = sol.Z.node(k, node);
                martingale_coeff(w_plus, w_minus, dt, zeta, Z);
                const auto a2 = coeffs.a2(k, node);
                const auto z = sol.z.node(k, node);
                for (std::size_t i = 0; i < w_minus.size(); ++i) z[i] = zeta[i] + dt * a2[i] * Z[i];
                if (source) {
                    const auto f = source->node(k, node);
                    for (std::size_t i = 0; i < w_minus.size(); ++i) z[i] -= dt * f[i];
                }
            }
        });
    }
    return sol;
}

double DualityBalance::relative_residual() const noexcept {
    const double scale = std::max({std::abs(terminal), std::abs(initial), std::abs(drift), std::abs(diffusion)});
    return scale > 0.0 ? std::abs(residual()) / scale : std::abs(residual());
}

DualityBalance duality_balance(const GridFunction& y0, const ControlPair& controls, const ForwardSolution& forward,
                               const BackwardSolution& backward, const ScenarioTree& tree, const Mesh& mesh) {
    const double h = mesh.spacing();
    const double dt = tree.dt();
    const int m = tree.depth();
    const auto chi = controls.region.indicator();

    DualityBalance b;
    b.terminal = tree_inner(forward.state, backward.z, m, h);
    b.initial = tree_inner(y0.interior(), backward.z0(), 0, h);

    std::vector<double> local;
    for (int k = 0; k < m; ++k) {
        const auto u = controls.u.level(k);
        local.assign(u.begin(), u.end());
        for (std::size_t at = 0; at < local.size(); ++at) local[at] *= chi[at % chi.size()];
        b.drift += dt * tree_inner(local, backward.zeta.level(k), k, h);
        b.diffusion += dt * tree_inner(controls.v, backward.Z, k, h);
    }
    return b;
}

}  // namespace stocnull

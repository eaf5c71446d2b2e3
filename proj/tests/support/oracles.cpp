#include "oracles.hpp"

#include <cmath>

namespace oracle {

using stocnull::AdaptedField;
using stocnull::ScenarioTree;

Eigen::MatrixXd step_matrix(const stocnull::Mesh& mesh, double dt, std::span<const double> a1) {
    const int n = mesh.interior_count();
    const double h2 = mesh.spacing() * mesh.spacing();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) -= dt * (-2.0 / h2 + a1[static_cast<std::size_t>(i)]);
        if (i > 0) m(i, i - 1) -= dt / h2;
        if (i + 1 < n) m(i, i + 1) -= dt / h2;
    }
    return m;
}

AdaptedField forward(std::span<const double> y0, const AdaptedField* u, const AdaptedField* v,
                     const stocnull::Region& region, const stocnull::Coefficients& coeffs, const ScenarioTree& tree,
                     const stocnull::Mesh& mesh) {
    const int n = mesh.interior_count();
    const double dt = tree.dt();
    AdaptedField y = AdaptedField::state(tree, n);
    std::copy(y0.begin(), y0.end(), y.node(0, 0).begin());
    const auto chi = region.indicator();
    for (int k = 0; k < tree.depth(); ++k) {
        for (std::size_t node = 0; node < ScenarioTree::node_count(k); ++node) {
            const auto a1 = coeffs.a1(k, node);
            const auto a2 = coeffs.a2(k, node);
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(step_matrix(mesh, dt, a1));
            const auto yk = y.node(k, node);
            for (int b = 0; b < 2; ++b) {
                const double dB = b ? tree.sqrt_dt() : -tree.sqrt_dt();
                Eigen::VectorXd rhs(n);
                for (int i = 0; i < n; ++i) {
                    const auto at = static_cast<std::size_t>(i);
                    const double ui = u ? u->node(k, node)[at] : 0.0;
                    const double vi = v ? v->node(k, node)[at] : 0.0;
                    rhs(i) = yk[at] + dt * chi[at] * ui + (a2[at] * yk[at] + vi) * dB;
                }
                const Eigen::VectorXd next = lu.solve(rhs);
                auto child = y.node(k + 1, ScenarioTree::child(node, b));
                for (int i = 0; i < n; ++i) child[static_cast<std::size_t>(i)] = next(i);
            }
        }
    }
    return y;
}

Eigen::MatrixXd control_to_terminal(const stocnull::Region& region, const stocnull::Coefficients& coeffs,
                                    const ScenarioTree& tree, const stocnull::Mesh& mesh) {
    const int n = mesh.interior_count();
    const auto per_field = static_cast<Eigen::Index>(AdaptedField::per_step(tree, n).value_count());
    const auto leaves = static_cast<Eigen::Index>(ScenarioTree::node_count(tree.depth()) * n);
    Eigen::MatrixXd g(leaves, 2 * per_field);
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index col = 0; col < 2 * per_field; ++col) {
        AdaptedField u = AdaptedField::per_step(tree, n);
        AdaptedField v = AdaptedField::per_step(tree, n);
        (col < per_field ? u : v).data()[static_cast<std::size_t>(col % per_field)] = 1.0;
        const AdaptedField y = forward(zero, &u, &v, region, coeffs, tree, mesh);
        g.col(col) = to_vector(y.level(tree.depth()));
    }
    return g;
}

Eigen::VectorXd control_weights(const ScenarioTree& tree, const stocnull::Mesh& mesh) {
    const int n = mesh.interior_count();
    const AdaptedField shape = AdaptedField::per_step(tree, n);
    const auto per_field = static_cast<Eigen::Index>(shape.value_count());
    Eigen::VectorXd w(2 * per_field);
    Eigen::Index at = 0;
    for (int copy = 0; copy < 2; ++copy) {
        for (int k = 0; k < tree.depth(); ++k) {
            const double weight = tree.dt() * std::ldexp(1.0, -k) * mesh.spacing();
            for (std::size_t j = 0; j < ScenarioTree::node_count(k) * static_cast<std::size_t>(n); ++j) w(at++) = weight;
        }
    }
    return w;
}

Eigen::MatrixXd gramian(const stocnull::Region& region, const stocnull::Coefficients& coeffs,
                        const ScenarioTree& tree, const stocnull::Mesh& mesh) {
    const Eigen::MatrixXd g = control_to_terminal(region, coeffs, tree, mesh);
    const Eigen::VectorXd wc = control_weights(tree, mesh);
    const double wt = std::ldexp(1.0, -tree.depth()) * mesh.spacing();
    return g * wc.cwiseInverse().asDiagonal() * g.transpose() * wt;
}

Eigen::VectorXd free_terminal(std::span<const double> y0, const stocnull::Coefficients& coeffs,
                              const ScenarioTree& tree, const stocnull::Mesh& mesh) {
    const AdaptedField y = forward(y0, nullptr, nullptr, stocnull::Region::everywhere(mesh), coeffs, tree, mesh);
    return to_vector(y.level(tree.depth()));
}

Eigen::VectorXd to_vector(std::span<const double> values) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i)) = values[i];
    return out;
}

stocnull::LevelField to_leaf_field(const Eigen::VectorXd& values, const ScenarioTree& tree, int width) {
    stocnull::LevelField f(tree.depth(), width);
    for (std::size_t i = 0; i < f.data().size(); ++i) f.data()[i] = values(static_cast<Eigen::Index>(i));
    return f;
}

std::vector<double> uniform_vector(std::size_t n, std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> d(-scale, scale);
    std::vector<double> out(n);
    for (double& x : out) x = d(rng);
    return out;
}

}  // namespace oracle

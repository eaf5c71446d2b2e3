#include "stocnull/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "stocnull/errors.hpp"
#include "stocnull/parallel.hpp"

namespace stocnull {

std::string to_string(CoefficientKind kind) {
    switch (kind) {
        case CoefficientKind::zero: return "zero";
        case CoefficientKind::constant: return "constant";
        case CoefficientKind::sinusoid: return "sinusoid";
        case CoefficientKind::adapted_random: return "adapted-random";
    }
    return "unknown";
}

CoefficientKind coefficient_kind_from_string(const std::string& name) {
    if (name == "zero") return CoefficientKind::zero;
    if (name == "constant") return CoefficientKind::constant;
    if (name == "sinusoid") return CoefficientKind::sinusoid;
    if (name == "adapted-random") return CoefficientKind::adapted_random;
    throw InvalidArgument("unknown coefficient kind '" + name + "' (expected zero, constant, sinusoid, adapted-random)");
}

Coefficients Coefficients::zero(const ScenarioTree& tree, const Mesh& mesh) { return constant(tree, mesh, 0.0, 0.0); }

Coefficients Coefficients::constant(const ScenarioTree& tree, const Mesh& mesh, double a1, double a2) {
    Coefficients c;
    c.width_ = mesh.interior_count();
    c.levels_ = tree.depth();
    c.a1_.assign(static_cast<std::size_t>(c.width_) * c.levels_, a1);
    c.a2_.assign(static_cast<std::size_t>(c.width_) * c.levels_, a2);
    c.finish();
    return c;
}

Coefficients Coefficients::sinusoid(const ScenarioTree& tree, const Mesh& mesh, double a1, double a2) {
    Coefficients c;
    c.width_ = mesh.interior_count();
    c.levels_ = tree.depth();
    c.a1_.resize(static_cast<std::size_t>(c.width_) * c.levels_);
    c.a2_.resize(c.a1_.size());
    for (int k = 0; k < c.levels_; ++k) {
        for (int i = 0; i < c.width_; ++i) {
            const double x = mesh.point(i + 1);
            const std::size_t at = static_cast<std::size_t>(k) * c.width_ + i;
            c.a1_[at] = a1 * std::sin(2.0 * std::numbers::pi * x);
            c.a2_[at] = a2 * std::cos(2.0 * std::numbers::pi * x);
        }
    }
    c.finish();
    return c;
}

Coefficients Coefficients::adapted_random(const ScenarioTree& tree, const Mesh& mesh, double a1, double a2,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    AdaptedField f1 = AdaptedField::per_step(tree, mesh.interior_count());
    AdaptedField f2 = AdaptedField::per_step(tree, mesh.interior_count());
    for (double& v : f1.data()) v = a1 * unit(rng);
    for (double& v : f2.data()) v = a2 * unit(rng);
    return from_fields(std::move(f1), std::move(f2));
}

Coefficients Coefficients::make(CoefficientKind kind, const ScenarioTree& tree, const Mesh& mesh, double a1, double a2,
                                std::uint64_t seed) {
    switch (kind) {
        case CoefficientKind::zero: return zero(tree, mesh);
        case CoefficientKind::constant: return constant(tree, mesh, a1, a2);
        case CoefficientKind::sinusoid: return sinusoid(tree, mesh, a1, a2);
        case CoefficientKind::adapted_random: return adapted_random(tree, mesh, a1, a2, seed);
    }
    throw InvalidArgument("unknown coefficient kind");
}

Coefficients Coefficients::from_fields(AdaptedField a1, AdaptedField a2) {
    if (a1.width() != a2.width() || a1.level_count() != a2.level_count()) {
        throw InvalidArgument("Coefficients::from_fields: a1 and a2 shapes differ");
    }
    Coefficients c;
    c.adapted_ = true;
    c.width_ = a1.width();
    c.levels_ = a1.level_count();
    c.a1_.assign(a1.data().begin(), a1.data().end());
    c.a2_.assign(a2.data().begin(), a2.data().end());
    c.finish();
    return c;
}

void Coefficients::finish() {
    a1_sup_ = 0.0;
    a2_sup_ = 0.0;
    for (double v : a1_) a1_sup_ = std::max(a1_sup_, std::abs(v));
    for (double v : a2_) a2_sup_ = std::max(a2_sup_, std::abs(v));
    if (!std::isfinite(a1_sup_) || !std::isfinite(a2_sup_)) throw InvalidArgument("coefficients must be finite");
}

std::span<const double> Coefficients::a1(int level, std::size_t node) const noexcept {
    const std::size_t row = adapted_ ? ScenarioTree::offset(level) + node : static_cast<std::size_t>(level);
    return {a1_.data() + row * width_, static_cast<std::size_t>(width_)};
}

std::span<const double> Coefficients::a2(int level, std::size_t node) const noexcept {
    const std::size_t row = adapted_ ? ScenarioTree::offset(level) + node : static_cast<std::size_t>(level);
    return {a2_.data() + row * width_, static_cast<std::size_t>(width_)};
}

Region Region::from_interval(const Mesh& mesh, const Interval& omega) {
    Region r;
    r.interval_ = omega;
    r.indicator_.resize(static_cast<std::size_t>(mesh.interior_count()));
    for (int i = 1; i <= mesh.interior_count(); ++i) {
        r.indicator_[static_cast<std::size_t>(i - 1)] = omega.contains(mesh.point(i)) ? 1.0 : 0.0;
    }
    return r;
}

Region Region::everywhere(const Mesh& mesh) { return from_interval(mesh, Interval{0.0, 1.0}); }

int Region::count() const noexcept {
    return static_cast<int>(std::count(indicator_.begin(), indicator_.end(), 1.0));
}

ControlPair ControlPair::zero(const ScenarioTree& tree, const Mesh& mesh, const Region& region) {
    return ControlPair{AdaptedField::per_step(tree, mesh.interior_count()),
                       AdaptedField::per_step(tree, mesh.interior_count()), region};
}

ControlPair ControlPair::localized(AdaptedField u, AdaptedField v, const Region& region) {
    const auto chi = region.indicator();
    auto data = u.data();
    for (std::size_t at = 0; at < data.size(); ++at) data[at] *= chi[at % chi.size()];
    return ControlPair{std::move(u), std::move(v), region};
}

void check_dominance(const Coefficients& coeffs, const ScenarioTree& tree) {
    const double margin = tree.dt() * coeffs.a1_sup();
    if (!(margin < 1.0)) {
        std::ostringstream msg;
        msg << "drift-implicit step needs dt*|a1|_inf < 1, got dt=" << tree.dt() << ", |a1|_inf=" << coeffs.a1_sup();
        throw InvalidArgument(msg.str());
    }
}

GridFunction forward_step(const GridFunction& y_k, const GridFunction& u_k, const GridFunction& v_k,
                          std::span<const double> a1, std::span<const double> a2, const Region& region, double dt,
                          double dB) {
    const Mesh& mesh = y_k.mesh();
    double a1_sup = 0.0;
    for (double v : a1) a1_sup = std::max(a1_sup, std::abs(v));
    if (!(dt * a1_sup < 1.0)) throw InvalidArgument("forward_step: dt*|a1|_inf must be below 1");

    const auto y = y_k.interior();
    const auto u = u_k.interior();
    const auto v = v_k.interior();
    const auto chi = region.indicator();
    std::vector<double> rhs(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rhs[i] = y[i] + dt * chi[i] * u[i] + (a2[i] * y[i] + v[i]) * dB;

    const ImplicitDriftOperator op(mesh, dt, a1);
    GridFunction out(mesh);
    op.solve(rhs, out.interior());
    return out;
}

ForwardSolution solve_forward(const GridFunction& y0, const AdaptedField* drift_control,
                              const AdaptedField* diffusion_control, const Region& region,
                              const Coefficients& coeffs, const ScenarioTree& tree, const Mesh& mesh) {
    check_dominance(coeffs, tree);
    const int n = mesh.interior_count();
    const double dt = tree.dt();
    const auto chi = region.indicator();

    ForwardSolution sol{AdaptedField::state(tree, n)};
    const auto y0_in = y0.interior();
    std::copy(y0_in.begin(), y0_in.end(), sol.state.node(0, 0).begin());

    for (int k = 0; k < tree.depth(); ++k) {
        parallel_for(ScenarioTree::node_count(k), [&](std::size_t begin, std::size_t end) {
            ImplicitDriftOperator op;
            std::vector<double> base(static_cast<std::size_t>(n)), noise(base.size()), rhs(base.size());
            for (std::size_t node = begin; node < end; ++node) {
                const auto y = sol.state.node(k, node);
                const auto a1 = coeffs.a1(k, node);
                const auto a2 = coeffs.a2(k, node);
                for (std::size_t i = 0; i < base.size(); ++i) {
                    base[i] = y[i];
                    noise[i] = a2[i] * y[i];
                }
                if (drift_control) {
                    const auto u = drift_control->node(k, node);
                    for (std::size_t i = 0; i < base.size(); ++i) base[i] += dt * chi[i] * u[i];
                }
                if (diffusion_control) {
                    const auto v = diffusion_control->node(k, node);
                    for (std::size_t i = 0; i < base.size(); ++i) noise[i] += v[i];
                }
                op.reset(mesh, dt, a1);
                for (int b = 0; b < 2; ++b) {
                    const double dB = tree.increment(b);
                    for (std::size_t i = 0; i < base.size(); ++i) rhs[i] = base[i] + noise[i] * dB;
                    op.solve(rhs, sol.state.node(k + 1, ScenarioTree::child(node, b)));
                }
            }
        });
    }
    return sol;
}

ForwardSolution solve_forward(const GridFunction& y0, const ControlPair& controls, const Coefficients& coeffs,
                              const ScenarioTree& tree, const Mesh& mesh) {
    return solve_forward(y0, &controls.u, &controls.v, controls.region, coeffs, tree, mesh);
}

ForwardSolution solve_free(const GridFunction& y0, const Coefficients& coeffs, const ScenarioTree& tree,
                           const Mesh& mesh) {
    return solve_forward(y0, nullptr, nullptr, Region::everywhere(mesh), coeffs, tree, mesh);
}

}  // namespace stocnull

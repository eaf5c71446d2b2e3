#include "stocnull/hum.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "stocnull/errors.hpp"

namespace stocnull {

namespace {

void axpy(double alpha, const LevelField& x, LevelField& y) {
    const auto xs = x.data();
    auto ys = y.data();
    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] += alpha * xs[i];
}

// sum_k dt E<chi a_k, b_k> over per-step fields
double localized_pairing(const AdaptedField& a, const AdaptedField& b, const Region& region, const ScenarioTree& tree,
                         double h) {
    const auto chi = region.indicator();
    double total = 0.0;
    std::vector<double> local;
    for (int k = 0; k < tree.depth(); ++k) {
        const auto src = a.level(k);
        local.assign(src.begin(), src.end());
        for (std::size_t at = 0; at < local.size(); ++at) local[at] *= chi[at % chi.size()];
        total += tree.dt() * tree_inner(local, b.level(k), k, h);
    }
    return total;
}

double step_pairing(const AdaptedField& a, const AdaptedField& b, const ScenarioTree& tree, double h) {
    double total = 0.0;
    for (int k = 0; k < tree.depth(); ++k) total += tree.dt() * tree_inner(a, b, k, h);
    return total;
}

AdaptedField negated(const AdaptedField& f) {
    AdaptedField out = f;
    for (double& v : out.data()) v = -v;
    return out;
}

}  // namespace

double epsilon_from_rate(double c_eps, double h) { return std::exp(-c_eps / h); }

void validate(const HumProblem& p) {
    if (!(p.epsilon > 0.0)) throw InvalidArgument("HUM: epsilon must be positive");
    if (p.region.width() != p.mesh.interior_count() || !(p.y0.mesh() == p.mesh)) {
        throw InvalidArgument("HUM: region / initial state do not match the mesh");
    }
    if (p.region.count() == 0) throw InvalidArgument("HUM: control region contains no mesh point");
    if (!(p.cg_tol > 0.0) || p.cg_maxiter < 1) throw InvalidArgument("HUM: cg_tol > 0 and cg_maxiter >= 1 required");
}

LevelField gramian_apply(const LevelField& zT, const HumProblem& p) {
    return gramian_apply(zT, p.coeffs, p.region, p.tree, p.mesh);
}

LevelField gramian_apply(const LevelField& zT, const Coefficients& coeffs, const Region& region,
                         const ScenarioTree& tree, const Mesh& mesh) {
    const BackwardSolution back = solve_backward(zT, coeffs, tree, mesh);
    const GridFunction zero(mesh);
    return solve_forward(zero, &back.zeta, &back.Z, region, coeffs, tree, mesh).terminal();
}

GridFunction make_initial_state(const Mesh& mesh, const InitialProfile& profile) {
    GridFunction y0(mesh);
    if (profile.kind == InitialKind::sine) {
        for (int i = 1; i <= mesh.interior_count(); ++i) {
            y0[i] = profile.amplitude * std::sin(profile.mode * std::numbers::pi * mesh.point(i));
        }
    } else {
        std::mt19937_64 rng(profile.seed);
        std::normal_distribution<double> gauss(0.0, profile.amplitude);
        for (int i = 1; i <= mesh.interior_count(); ++i) y0[i] = gauss(rng);
    }
    return y0;
}

CgResult conjugate_gradient(const std::function<LevelField(const LevelField&)>& apply, const LevelField& rhs,
                            double h, double tol, int maxiter) {
    CgResult res;
    res.solution = LevelField(rhs.level(), rhs.width());
    res.rhs_norm = std::sqrt(tree_inner(rhs, rhs, h));
    if (res.rhs_norm == 0.0) return res;

    LevelField r = rhs;
    LevelField p = rhs;
    double rr = tree_inner(r, r, h);
    for (int it = 1; it <= maxiter; ++it) {
        const LevelField ap = apply(p);
        const double curvature = tree_inner(p, ap, h);
        if (!(curvature > 0.0)) {
            throw ConvergenceFailure("CG met non-positive curvature at iteration " + std::to_string(it), res.history);
        }
        const double alpha = rr / curvature;
        axpy(alpha, p, res.solution);
        axpy(-alpha, ap, r);
        const double rr_next = tree_inner(r, r, h);
        res.iterations = it;
        res.relative_residual = std::sqrt(rr_next) / res.rhs_norm;
        res.history.push_back(res.relative_residual);
        if (res.relative_residual <= tol) return res;
        const double beta = rr_next / rr;
        rr = rr_next;
        auto ps = p.data();
        const auto rs = r.data();
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = rs[i] + beta * ps[i];
    }
    std::ostringstream msg;
    msg << "CG did not reach relative residual " << tol << " within " << maxiter << " iterations (last "
        << res.relative_residual << ")";
    throw ConvergenceFailure(msg.str(), res.history);
}

HumSolution solve_hum(const HumProblem& p) {
    validate(p);
    const double h = p.mesh.spacing();
    const LevelField b = solve_free(p.y0, p.coeffs, p.tree, p.mesh).terminal();

    auto apply = [&p](const LevelField& z) {
        LevelField out = gramian_apply(z, p);
        axpy(p.epsilon, z, out);
        return out;
    };
    CgResult cg = conjugate_gradient(apply, b, h, p.cg_tol, p.cg_maxiter);

    HumSolution sol;
    sol.zT_star = std::move(cg.solution);
    sol.backward = solve_backward(sol.zT_star, p.coeffs, p.tree, p.mesh);
    sol.controls = ControlPair::localized(negated(sol.backward.zeta), negated(sol.backward.Z), p.region);
    sol.yT = solve_forward(p.y0, sol.controls, p.coeffs, p.tree, p.mesh).terminal();

    LevelField gap = sol.yT;
    axpy(-p.epsilon, sol.zT_star, gap);

    HumDiagnostics& d = sol.diagnostics;
    d.residual_history = std::move(cg.history);
    d.cg_iterations = cg.iterations;
    d.cg_residual = cg.relative_residual;
    d.rhs_norm = cg.rhs_norm;
    d.closure_error = std::sqrt(tree_inner(gap, gap, h));
    d.J = evaluate_J(sol.zT_star, p);
    return sol;
}

double evaluate_J(const LevelField& zT, const HumProblem& p) {
    const double h = p.mesh.spacing();
    const BackwardSolution back = solve_backward(zT, p.coeffs, p.tree, p.mesh);
    const double diffusion = step_pairing(back.Z, back.Z, p.tree, h);
    const double drift = localized_pairing(back.zeta, back.zeta, p.region, p.tree, h);
    const double terminal = tree_inner(zT, zT, h);
    const double coupling = tree_inner(p.y0.interior(), back.z0(), 0, h);
    return 0.5 * diffusion + 0.5 * drift + 0.5 * p.epsilon * terminal - coupling;
}

LevelField gradient_J(const LevelField& zT, const HumProblem& p) {
    const BackwardSolution back = solve_backward(zT, p.coeffs, p.tree, p.mesh);
    const AdaptedField u = negated(back.zeta);
    const AdaptedField v = negated(back.Z);
    LevelField grad = solve_forward(p.y0, &u, &v, p.region, p.coeffs, p.tree, p.mesh).terminal();
    for (double& g : grad.data()) g = -g;
    axpy(p.epsilon, zT, grad);
    return grad;
}

BoundsReport report_bounds(const HumSolution& sol, const HumProblem& p) {
    const double h = p.mesh.spacing();
    BoundsReport r;
    r.y0_energy = tree_inner(p.y0.interior(), p.y0.interior(), 0, h);
    r.control_cost = step_pairing(sol.controls.v, sol.controls.v, p.tree, h) +
                     localized_pairing(sol.controls.u, sol.controls.u, p.region, p.tree, h);
    r.terminal_energy = tree_inner(sol.yT, sol.yT, h);
    r.zT_energy = tree_inner(sol.zT_star, sol.zT_star, h);
    if (r.y0_energy > 0.0) {
        r.cost_ratio = r.control_cost / r.y0_energy;
        r.terminal_ratio = r.terminal_energy / r.y0_energy;
        r.terminal_over_eps_ratio = r.terminal_ratio / p.epsilon;
    }
    return r;
}

}  // namespace stocnull

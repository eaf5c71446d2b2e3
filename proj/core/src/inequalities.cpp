#include "stocnull/inequalities.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "stocnull/errors.hpp"

namespace stocnull {

void LogSum::add_log(double log_term) noexcept {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (scaled_ == 0.0) {
        max_ = log_term;
        scaled_ = 1.0;
    } else if (log_term > max_) {
        scaled_ = scaled_ * std::exp(max_ - log_term) + 1.0;
        max_ = log_term;
    } else {
        scaled_ += std::exp(log_term - max_);
    }
}

void LogSum::add(const LogSum& other) noexcept {
    if (other.zero()) return;
    add_log(other.log());
}

double LogSum::log() const noexcept {
    return zero() ? -std::numeric_limits<double>::infinity() : max_ + std::log(scaled_);
}

double LogSum::value() const noexcept { return zero() ? 0.0 : std::exp(log()); }

WSolution solve_w_equation(const LevelField& wT, const AdaptedField& f, const ScenarioTree& tree, const Mesh& mesh) {
    const Coefficients none = Coefficients::zero(tree, mesh);
    BackwardSolution back = solve_backward(wT, none, tree, mesh, &f);
    return WSolution{std::move(back.z), SourcePair{f, std::move(back.Z)}};
}

LogSum CarlemanTerms::lhs() const {
    LogSum out = state;
    out.add(gradient);
    return out;
}

LogSum CarlemanTerms::rhs() const {
    LogSum out = observed;
    out.add(diffusion);
    out.add(drift);
    out.add(initial);
    out.add(terminal);
    return out;
}

double CarlemanTerms::ratio() const {
    const LogSum l = lhs();
    const LogSum r = rhs();
    if (l.zero()) return 0.0;
    if (r.zero()) return std::numeric_limits<double>::infinity();
    return std::exp(l.log() - r.log());
}

namespace {

double log_square(double v) { return v == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(std::abs(v)); }

}  // namespace

CarlemanTerms carleman_terms(const AdaptedField& w, const SourcePair& sources, const CarlemanWeights& weights,
                             const Region& region, const ScenarioTree& tree, const Mesh& mesh) {
    const int n = mesh.interior_count();
    const double h = mesh.spacing();
    const double dt = tree.dt();
    const int m = tree.depth();
    if (w.width() != n || w.level_count() != m + 1) throw InvalidArgument("carleman_terms: w must be a state field");

    const RegimeDecision regime = validate_regime(weights, h);
    if (!regime.accepted) {
        std::ostringstream msg;
        msg << "carleman_terms: regime lambda h / (delta T^2) = " << regime.ratio << " exceeds eps0 = "
            << weights.params().eps0;
        throw InvalidArgument(msg.str());
    }
    if (std::abs(weights.params().T - tree.horizon()) > 1e-12 * tree.horizon()) {
        throw InvalidArgument("carleman_terms: weight horizon differs from the tree horizon");
    }

    std::vector<double> phi_primal(static_cast<std::size_t>(n)), phi_dual(static_cast<std::size_t>(n + 1));
    for (int i = 1; i <= n; ++i) phi_primal[static_cast<std::size_t>(i - 1)] = weights.phi(mesh.point(i));
    for (int j = 0; j <= n; ++j) phi_dual[static_cast<std::size_t>(j)] = weights.phi(mesh.dual_point(j));
    const auto chi = region.indicator();
    const double log_h = std::log(h);

    CarlemanTerms terms;

    // Boundary-in-time terms: h^-2 * h sum e^{2 s phi} w^2 at levels 0 and m.
    auto time_slice = [&](int level, double t, LogSum& into) {
        const double two_s = 2.0 * weights.s(t);
        const double base = -2.0 * log_h + log_h + std::log(ScenarioTree::probability(level));
        for (std::size_t node = 0; node < ScenarioTree::node_count(level); ++node) {
            const auto wn = w.node(level, node);
            for (int i = 0; i < n; ++i) {
                into.add_log(base + two_s * phi_primal[static_cast<std::size_t>(i)] + log_square(wn[static_cast<std::size_t>(i)]));
            }
        }
    };
    time_slice(0, 0.0, terms.initial);
    time_slice(m, tree.horizon(), terms.terminal);

    std::vector<double> grad(static_cast<std::size_t>(n + 1));
    for (int k = 0; k < m; ++k) {
        const double t = tree.time(k);
        const double s = weights.s(t);
        const double two_s = 2.0 * s;
        const double log_s = std::log(s);
        const double base = std::log(dt) + log_h + std::log(ScenarioTree::probability(k));
        for (std::size_t node = 0; node < ScenarioTree::node_count(k); ++node) {
            const auto wn = w.node(k, node);
            const auto fn = sources.f.node(k, node);
            const auto gn = sources.g.node(k, node);
            for (int i = 0; i < n; ++i) {
                const auto at = static_cast<std::size_t>(i);
                const double weight = two_s * phi_primal[at];
                const double lw = log_square(wn[at]);
                terms.state.add_log(base + 3.0 * log_s + weight + lw);
                if (chi[at] != 0.0) terms.observed.add_log(base + 3.0 * log_s + weight + lw);
                terms.diffusion.add_log(base + 2.0 * log_s + weight + log_square(gn[at]));
                terms.drift.add_log(base + weight + log_square(fn[at]));
            }
            for (int j = 0; j <= n; ++j) {
                const double right = j < n ? wn[static_cast<std::size_t>(j)] : 0.0;
                const double left = j > 0 ? wn[static_cast<std::size_t>(j - 1)] : 0.0;
                grad[static_cast<std::size_t>(j)] = (right - left) / h;
            }
            for (int j = 0; j <= n; ++j) {
                const auto at = static_cast<std::size_t>(j);
                terms.gradient.add_log(base + log_s + two_s * phi_dual[at] + log_square(grad[at]));
            }
        }
    }
    return terms;
}

CarlemanStudy carleman_study(const CarlemanWeights& weights, const Region& region, const ScenarioTree& tree,
                             const Mesh& mesh, int samples, std::uint64_t seed) {
    if (samples < 1) throw InvalidArgument("carleman_study: need at least one sample");
    CarlemanStudy study;
    study.samples = samples;
    study.min_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const LevelField wT = random_level_field(tree.depth(), mesh.interior_count(), rng);
        const AdaptedField f = random_adapted_field(tree, mesh.interior_count(), tree.depth(), rng);
        const WSolution sol = solve_w_equation(wT, f, tree, mesh);
        const double ratio = carleman_terms(sol.w, sol.sources, weights, region, tree, mesh).ratio();
        study.ratios.push_back(ratio);
        study.max_ratio = std::max(study.max_ratio, ratio);
        study.min_ratio = std::min(study.min_ratio, ratio);
    }
    return study;
}

ObservabilityRecord observability_record(const LevelField& zT, const Coefficients& coeffs, const Region& region,
                                         const ScenarioTree& tree, const Mesh& mesh) {
    const double h = mesh.spacing();
    const double dt = tree.dt();
    const BackwardSolution back = solve_backward(zT, coeffs, tree, mesh);
    const auto chi = region.indicator();

    ObservabilityRecord rec;
    rec.lhs = tree_inner(back.z0(), back.z0(), 0, h);
    rec.terminal = tree_inner(zT, zT, h);
    std::vector<double> local;
    for (int k = 0; k < tree.depth(); ++k) {
        rec.diffusion += dt * tree_inner(back.Z, back.Z, k, h);
        const auto zeta = back.zeta.level(k);
        local.assign(zeta.begin(), zeta.end());
        for (std::size_t at = 0; at < local.size(); ++at) local[at] *= chi[at % chi.size()];
        rec.observed += dt * tree_inner(local, local, k, h);
    }
    return rec;
}

namespace {

struct SpanFit {
    double c = 0.0;
    double sample_max = 0.0;
};

SpanFit fit_constant(const std::vector<ObservabilityRecord>& records, const Eigen::MatrixXd& lhs_gram,
                     const Eigen::MatrixXd& gramian_gram, const Eigen::MatrixXd& terminal_gram, double kappa) {
    SpanFit fit;
    for (const auto& r : records) {
        const double rhs = r.rhs(kappa);
        if (rhs > 0.0) fit.sample_max = std::max(fit.sample_max, r.lhs / rhs);
    }
    fit.c = fit.sample_max;
    if (lhs_gram.rows() == 0) return fit;

    const Eigen::MatrixXd B = gramian_gram + kappa * terminal_gram;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(lhs_gram, B, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (solver.info() == Eigen::Success) fit.c = std::max(fit.c, solver.eigenvalues().maxCoeff());
    return fit;
}

}  // namespace

FittedConstant observability_sample(const std::vector<LevelField>& train, const std::vector<LevelField>& holdout,
                                    const Coefficients& coeffs, const Region& region, const ScenarioTree& tree,
                                    const Mesh& mesh, double c_eps) {
    if (train.size() + holdout.size() < 2 || train.empty()) {
        throw InvalidArgument("observability_sample: need at least one training and two samples in total");
    }
    const double h = mesh.spacing();
    FittedConstant fit;
    fit.kappa = std::exp(-c_eps / h);
    fit.kappa_h2 = fit.kappa / (h * h);

    // Training pass: records plus the pieces of the Gram matrices.
    std::vector<LevelField> kept;
    std::vector<LevelField> images;
    std::vector<std::vector<double>> initial_values;
    for (const LevelField& zT : train) {
        const ObservabilityRecord rec = observability_record(zT, coeffs, region, tree, mesh);
        if (rec.lhs == 0.0 && rec.rhs(1.0) == 0.0) {
            ++fit.excluded;
            continue;
        }
        fit.train_records.push_back(rec);
        kept.push_back(zT);
        images.push_back(gramian_apply(zT, coeffs, region, tree, mesh));
        const BackwardSolution back = solve_backward(zT, coeffs, tree, mesh);
        initial_values.emplace_back(back.z0().begin(), back.z0().end());
    }
    fit.train = static_cast<int>(kept.size());

    const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd lhs_gram(n, n), gramian_gram(n, n), terminal_gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
            lhs_gram(i, j) = lhs_gram(j, i) = tree_inner(initial_values[a], initial_values[b], 0, h);
            gramian_gram(i, j) = gramian_gram(j, i) =
                0.5 * (tree_inner(kept[a], images[b], h) + tree_inner(kept[b], images[a], h));
            terminal_gram(i, j) = terminal_gram(j, i) = tree_inner(kept[a], kept[b], h);
        }
    }

    const SpanFit plain = fit_constant(fit.train_records, lhs_gram, gramian_gram, terminal_gram, fit.kappa);
    const SpanFit scaled = fit_constant(fit.train_records, lhs_gram, gramian_gram, terminal_gram, fit.kappa_h2);
    fit.c = plain.c;
    fit.c_sample_max = plain.sample_max;
    fit.c_h2 = scaled.c;
    fit.c_h2_sample_max = scaled.sample_max;

    // A holdout sample violates the bound when LHS > C RHS beyond rounding.
    constexpr double kRoundoff = 1e-12;
    for (const LevelField& zT : holdout) {
        const ObservabilityRecord rec = observability_record(zT, coeffs, region, tree, mesh);
        if (rec.lhs == 0.0 && rec.rhs(1.0) == 0.0) {
            ++fit.excluded;
            continue;
        }
        fit.holdout_records.push_back(rec);
        const double rhs = rec.rhs(fit.kappa);
        fit.holdout_max_ratio = std::max(fit.holdout_max_ratio, rhs > 0.0 ? rec.lhs / rhs : 0.0);
        if (rec.lhs > fit.c * rhs * (1.0 + kRoundoff)) ++fit.holdout_violations;
        if (rec.lhs > fit.c_h2 * rec.rhs(fit.kappa_h2) * (1.0 + kRoundoff)) ++fit.holdout_violations_h2;
    }
    fit.holdout = static_cast<int>(fit.holdout_records.size());
    return fit;
}

std::vector<LevelField> random_terminal_family(const ScenarioTree& tree, const Mesh& mesh, int count,
                                               std::uint64_t seed, std::uint64_t first_index) {
    std::vector<LevelField> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(derive_seed(seed, first_index + static_cast<std::uint64_t>(i)));
        out.push_back(random_level_field(tree.depth(), mesh.interior_count(), rng));
    }
    return out;
}

namespace {

std::string describe(const std::exception& e) {
    std::string s = e.what();
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

std::vector<SweepRow> h_sweep(const SweepSettings& cfg) {
    std::vector<SweepRow> rows;
    const double h1 = schedule_threshold(cfg.eps0, cfg.delta0, cfg.T, cfg.lambda);
    for (std::size_t r = 0; r < cfg.h_values.size(); ++r) {
        SweepRow row;
        row.h = cfg.h_values[r];
        row.lambda = cfg.lambda;
        row.mu = cfg.mu;
        row.depth = cfg.depth;
        rows.push_back(row);
        SweepRow& out = rows.back();

        const double inv_h = 1.0 / row.h;
        out.N = static_cast<int>(std::lround(inv_h)) - 1;
        if (!(row.h > 0.0) || std::abs(inv_h - (out.N + 1)) > 1e-9 * inv_h || out.N < 2) {
            out.skipped = true;
            out.reason = "h is not 1/(N+1) with N >= 2";
            continue;
        }
        if (row.h > h1) {
            out.skipped = true;
            std::ostringstream msg;
            msg << "h exceeds schedule threshold h1 = " << h1;
            out.reason = msg.str();
            continue;
        }
        try {
            out.delta = delta_schedule(row.h, h1, cfg.delta0);
            WeightParams wp;
            wp.T = cfg.T;
            wp.lambda = cfg.lambda;
            wp.mu = cfg.mu;
            wp.delta = out.delta;
            wp.x0 = cfg.x0;
            wp.K = cfg.K;
            wp.eps0 = cfg.eps0;
            wp.omega = cfg.omega;
            wp.omega0 = cfg.omega0;
            const CarlemanWeights weights = CarlemanWeights::build(wp);
            const RegimeDecision regime = validate_regime(weights, row.h);
            if (!regime.accepted) {
                out.skipped = true;
                std::ostringstream msg;
                msg << "regime ratio " << regime.ratio << " exceeds eps0";
                out.reason = msg.str();
                continue;
            }
        } catch (const std::invalid_argument& e) {
            out.skipped = true;
            out.reason = describe(e);
            continue;
        }

        try {
            const Mesh mesh = Mesh::build(out.N);
            const ScenarioTree tree = ScenarioTree::build(cfg.depth, cfg.T, cfg.max_depth);
            const Coefficients coeffs =
                Coefficients::make(cfg.coefficient_kind, tree, mesh, cfg.a1, cfg.a2, derive_seed(cfg.seed, 1000 + r));
            const Region region = Region::from_interval(mesh, cfg.omega);
            out.eps = epsilon_from_rate(cfg.c_eps, row.h);

            HumProblem problem{mesh, tree, coeffs, region, make_initial_state(mesh, cfg.initial), out.eps, cfg.cg_tol,
                               cfg.cg_maxiter};
            const HumSolution sol = solve_hum(problem);
            const BoundsReport bounds = report_bounds(sol, problem);
            out.term_ratio = bounds.terminal_ratio;
            out.cost_ratio = bounds.cost_ratio;
            out.cg_iters = sol.diagnostics.cg_iterations;
            out.closure_err = sol.diagnostics.closure_error;

            const std::uint64_t family_seed = derive_seed(cfg.seed, 2000 + r);
            const auto train = random_terminal_family(tree, mesh, cfg.obs_train, family_seed, 0);
            const auto holdout = random_terminal_family(tree, mesh, cfg.obs_holdout, family_seed,
                                                        static_cast<std::uint64_t>(cfg.obs_train));
            out.obs_C = observability_sample(train, holdout, coeffs, region, tree, mesh, cfg.c_eps).c;
        } catch (const std::invalid_argument& e) {
            out.skipped = true;
            out.reason = describe(e);
        } catch (const std::runtime_error& e) {
            out.skipped = true;
            out.numerical_failure = true;
            out.reason = describe(e);
        }
    }
    return rows;
}

double decay_slope(const std::vector<SweepRow>& rows) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (const SweepRow& r : rows) {
        if (r.skipped || !(r.term_ratio > 0.0)) continue;
        const double x = 1.0 / r.h;
        const double y = std::log(r.term_ratio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    const double denom = count * sxx - sx * sx;
    return (count * sxy - sx * sy) / denom;
}

}  // namespace stocnull

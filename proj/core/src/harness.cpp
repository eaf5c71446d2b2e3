#include "stocnull/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stocnull/backward_solver.hpp"
#include "stocnull/discrete_calc.hpp"
#include "stocnull/errors.hpp"
#include "stocnull/noise_tree.hpp"
#include "stocnull/weights.hpp"

namespace stocnull {

using nlohmann::json;

namespace {

// Seed streams derived from the configured root seed.
enum Stream : std::uint64_t {
    kCoefficients = 1,
    kInitialState = 2,
    kObservability = 3,
    kCarleman = 4,
    kIdentities = 5,
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Typed reads that record a violation instead of throwing.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    const json* object(const json& parent, const char* key, const std::string& path,
                       std::initializer_list<const char*> allowed) {
        const auto it = parent.find(key);
        if (it == parent.end()) return nullptr;
        if (!it->is_object()) {
            errors_.push_back(path + ": expected an object");
            return nullptr;
        }
        check_keys(*it, path, allowed);
        return &*it;
    }

    void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        for (const auto& item : obj.items()) {
            const bool known = std::any_of(allowed.begin(), allowed.end(),
                                           [&](const char* k) { return item.key() == k; });
            if (!known) errors_.push_back((path.empty() ? "" : path + ".") + item.key() + ": unknown key");
        }
    }

    void number(const json* obj, const char* key, const std::string& path, double& out) {
        if (!obj) return;
        const auto it = obj->find(key);
        if (it == obj->end()) return;
        if (!it->is_number()) {
            errors_.push_back(path + ": expected a number");
            return;
        }
        out = it->get<double>();
    }

    void number(const json* obj, const char* key, const std::string& path, std::optional<double>& out) {
        if (!obj || obj->find(key) == obj->end()) return;
        double v = 0.0;
        number(obj, key, path, v);
        out = v;
    }

    void integer(const json* obj, const char* key, const std::string& path, int& out) {
        if (!obj) return;
        const auto it = obj->find(key);
        if (it == obj->end()) return;
        if (!it->is_number_integer()) {
            errors_.push_back(path + ": expected an integer");
            return;
        }
        const auto v = it->get<std::int64_t>();
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            errors_.push_back(path + ": integer out of range");
            return;
        }
        out = static_cast<int>(v);
    }

    void unsigned64(const json* obj, const char* key, const std::string& path, std::uint64_t& out) {
        if (!obj) return;
        const auto it = obj->find(key);
        if (it == obj->end()) return;
        if (!it->is_number_unsigned()) {
            errors_.push_back(path + ": expected a nonnegative integer");
            return;
        }
        out = it->get<std::uint64_t>();
    }

    void text(const json* obj, const char* key, const std::string& path, std::string& out) {
        if (!obj) return;
        const auto it = obj->find(key);
        if (it == obj->end()) return;
        if (!it->is_string()) {
            errors_.push_back(path + ": expected a string");
            return;
        }
        out = it->get<std::string>();
    }

    void interval(const json* obj, const char* key, const std::string& path, Interval& out) {
        if (!obj) return;
        const auto it = obj->find(key);
        if (it == obj->end()) return;
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
            errors_.push_back(path + ": expected [lo, hi]");
            return;
        }
        out = Interval{(*it)[0].get<double>(), (*it)[1].get<double>()};
    }

    void numbers(const json* obj, const char* key, const std::string& path, std::vector<double>& out) {
        if (!obj) return;
        const auto it = obj->find(key);
        if (it == obj->end()) return;
        if (!it->is_array()) {
            errors_.push_back(path + ": expected an array of numbers");
            return;
        }
        std::vector<double> values;
        for (const auto& v : *it) {
            if (!v.is_number()) {
                errors_.push_back(path + ": expected an array of numbers");
                return;
            }
            values.push_back(v.get<double>());
        }
        out = std::move(values);
    }

private:
    std::vector<std::string>& errors_;
};

const char* initial_kind_name(InitialKind kind) { return kind == InitialKind::sine ? "sine" : "random"; }

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> v;
    auto need = [&](bool ok, const std::string& message) {
        if (!ok) v.push_back(message);
    };

    need(c.N >= 2, "mesh.N: must be >= 2 (got " + std::to_string(c.N) + ")");
    need(c.max_depth >= 1 && c.max_depth <= 24, "tree.max_depth: must lie in [1, 24]");
    need(c.depth >= 1 && c.depth <= c.max_depth,
         "tree.depth: must lie in [1, max_depth = " + std::to_string(c.max_depth) + "]");
    need(finite_positive(c.T), "tree.T: must be positive");

    const bool omega_ok = c.omega.valid() && c.omega.lo >= 0.0 && c.omega.hi <= 1.0;
    need(omega_ok, "omega: must be an interval inside (0, 1)");
    need(c.omega0.valid() && c.omega.contains_closure_of(c.omega0),
         "omega0: closure must lie inside omega");
    if (omega_ok && c.N >= 2) {
        need(Region::from_interval(Mesh::build(c.N), c.omega).count() > 0, "omega: contains no mesh point");
    }

    need(std::isfinite(c.a1) && c.a1 >= 0.0, "coefficients.a1: must be a nonnegative magnitude");
    need(std::isfinite(c.a2) && c.a2 >= 0.0, "coefficients.a2: must be a nonnegative magnitude");
    if (finite_positive(c.T) && c.depth >= 1 && std::isfinite(c.a1)) {
        need(c.T / c.depth * c.a1 < 1.0, "coefficients.a1: dominance dt * |a1| < 1 violated (dt = " +
                                             fmt(c.T / c.depth) + ")");
    }

    need(c.initial_mode >= 1, "initial_state.mode: must be >= 1");
    need(std::isfinite(c.initial_amplitude), "initial_state.amplitude: must be finite");

    need(std::isfinite(c.lambda) && c.lambda > 1.0, "weights.lambda: must exceed 1");
    need(std::isfinite(c.mu) && c.mu > 1.0, "weights.mu: must exceed 1");
    need(c.delta0 > 0.0 && c.delta0 < 0.5, "weights.delta0: must lie in (0, 1/2)");
    need(c.eps0 > 0.0 && c.eps0 <= 1.0, "weights.eps0: must lie in (0, 1]");
    need(std::isfinite(c.K), "weights.K: must be finite");
    need(finite_positive(c.c_eps), "weights.C_eps: must be positive");
    if (c.x0) need(c.omega0.contains(*c.x0), "weights.x0: must lie in omega0");

    const std::size_t before = v.size();
    if (v.empty()) {
        try {
            WeightParams wp;
            wp.T = c.T;
            wp.lambda = c.lambda;
            wp.mu = c.mu;
            wp.delta = c.delta0;
            wp.x0 = c.weight_center();
            wp.K = c.K;
            wp.eps0 = c.eps0;
            wp.omega = c.omega;
            wp.omega0 = c.omega0;
            CarlemanWeights::build(wp);
        } catch (const std::invalid_argument& e) {
            v.push_back(std::string("weights: ") + e.what());
        }
        if (v.size() == before) {
            const double h = 1.0 / (c.N + 1);
            const double h1 = schedule_threshold(c.eps0, c.delta0, c.T, c.lambda);
            need(h <= h1, "mesh.N: h = 1/(N+1) = " + fmt(h) + " exceeds the schedule threshold h1 = " + fmt(h1));
        }
    }

    need(c.cg_tol > 0.0 && c.cg_tol < 1.0, "hum.cg_tol: must lie in (0, 1)");
    need(c.cg_maxiter >= 1, "hum.cg_maxiter: must be >= 1");
    if (c.epsilon) need(finite_positive(*c.epsilon), "hum.epsilon: must be positive");

    need(c.obs_train >= 1, "observability.train: must be >= 1");
    need(c.obs_holdout >= 1, "observability.holdout: must be >= 1");
    need(c.carleman_samples >= 1, "carleman.samples: must be >= 1");

    for (std::size_t i = 0; i < c.sweep_h.size(); ++i) {
        const double h = c.sweep_h[i];
        const std::string where = "sweep.h[" + std::to_string(i) + "]";
        if (!(h > 0.0 && h <= 1.0 / 3.0)) {
            v.push_back(where + ": must lie in (0, 1/3]");
            continue;
        }
        const double inv = 1.0 / h;
        need(std::abs(inv - std::round(inv)) <= 1e-9 * inv, where + ": 1/h must be an integer");
    }
    need(c.sweep_train >= 1, "sweep.train: must be >= 1");
    need(c.sweep_holdout >= 1, "sweep.holdout: must be >= 1");
    return v;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config: malformed JSON: ") + e.what()});
    }
    if (!root.is_object()) throw ConfigError({"config: top level must be an object"});

    ExperimentConfig c;
    std::vector<std::string> errors;
    Reader r(errors);
    r.check_keys(root, "", {"mesh", "tree", "omega", "omega0", "coefficients", "initial_state", "weights", "hum",
                            "observability", "carleman", "sweep", "seed", "output"});

    const json* mesh = r.object(root, "mesh", "mesh", {"N"});
    r.integer(mesh, "N", "mesh.N", c.N);

    const json* tree = r.object(root, "tree", "tree", {"depth", "T", "max_depth"});
    r.integer(tree, "depth", "tree.depth", c.depth);
    r.number(tree, "T", "tree.T", c.T);
    r.integer(tree, "max_depth", "tree.max_depth", c.max_depth);

    r.interval(&root, "omega", "omega", c.omega);
    r.interval(&root, "omega0", "omega0", c.omega0);

    const json* coeffs = r.object(root, "coefficients", "coefficients", {"kind", "a1", "a2"});
    std::string kind;
    r.text(coeffs, "kind", "coefficients.kind", kind);
    if (!kind.empty()) {
        try {
            c.coefficient_kind = coefficient_kind_from_string(kind);
        } catch (const std::invalid_argument&) {
            errors.push_back("coefficients.kind: unknown kind '" + kind +
                             "' (expected zero, constant, sinusoid or adapted-random)");
        }
    }
    r.number(coeffs, "a1", "coefficients.a1", c.a1);
    r.number(coeffs, "a2", "coefficients.a2", c.a2);

    const json* initial = r.object(root, "initial_state", "initial_state", {"kind", "mode", "amplitude"});
    std::string ikind;
    r.text(initial, "kind", "initial_state.kind", ikind);
    if (ikind == "sine") {
        c.initial_kind = InitialKind::sine;
    } else if (ikind == "random") {
        c.initial_kind = InitialKind::random;
    } else if (!ikind.empty()) {
        errors.push_back("initial_state.kind: unknown kind '" + ikind + "' (expected sine or random)");
    }
    r.integer(initial, "mode", "initial_state.mode", c.initial_mode);
    r.number(initial, "amplitude", "initial_state.amplitude", c.initial_amplitude);

    const json* weights = r.object(root, "weights", "weights", {"lambda", "mu", "delta0", "x0", "K", "eps0", "C_eps"});
    r.number(weights, "lambda", "weights.lambda", c.lambda);
    r.number(weights, "mu", "weights.mu", c.mu);
    r.number(weights, "delta0", "weights.delta0", c.delta0);
    r.number(weights, "x0", "weights.x0", c.x0);
    r.number(weights, "K", "weights.K", c.K);
    r.number(weights, "eps0", "weights.eps0", c.eps0);
    r.number(weights, "C_eps", "weights.C_eps", c.c_eps);

    const json* hum = r.object(root, "hum", "hum", {"cg_tol", "cg_maxiter", "epsilon"});
    r.number(hum, "cg_tol", "hum.cg_tol", c.cg_tol);
    r.integer(hum, "cg_maxiter", "hum.cg_maxiter", c.cg_maxiter);
    r.number(hum, "epsilon", "hum.epsilon", c.epsilon);

    const json* obs = r.object(root, "observability", "observability", {"train", "holdout"});
    r.integer(obs, "train", "observability.train", c.obs_train);
    r.integer(obs, "holdout", "observability.holdout", c.obs_holdout);

    const json* carleman = r.object(root, "carleman", "carleman", {"samples"});
    r.integer(carleman, "samples", "carleman.samples", c.carleman_samples);

    const json* sweep = r.object(root, "sweep", "sweep", {"h", "train", "holdout"});
    r.numbers(sweep, "h", "sweep.h", c.sweep_h);
    r.integer(sweep, "train", "sweep.train", c.sweep_train);
    r.integer(sweep, "holdout", "sweep.holdout", c.sweep_holdout);

    r.unsigned64(&root, "seed", "seed", c.seed);
    r.text(&root, "output", "output", c.output);

    // Fields that failed to parse keep their defaults, so the semantic checks
    // still report every remaining violation.
    for (auto& v : validate_config(c)) errors.push_back(std::move(v));
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["mesh"] = {{"N", c.N}};
    j["tree"] = {{"depth", c.depth}, {"T", c.T}, {"max_depth", c.max_depth}};
    j["omega"] = {c.omega.lo, c.omega.hi};
    j["omega0"] = {c.omega0.lo, c.omega0.hi};
    j["coefficients"] = {{"kind", to_string(c.coefficient_kind)}, {"a1", c.a1}, {"a2", c.a2}};
    j["initial_state"] = {
        {"kind", initial_kind_name(c.initial_kind)}, {"mode", c.initial_mode}, {"amplitude", c.initial_amplitude}};
    nlohmann::ordered_json w;
    w["lambda"] = c.lambda;
    w["mu"] = c.mu;
    w["delta0"] = c.delta0;
    if (c.x0) w["x0"] = *c.x0;
    w["K"] = c.K;
    w["eps0"] = c.eps0;
    w["C_eps"] = c.c_eps;
    j["weights"] = w;
    nlohmann::ordered_json hum;
    hum["cg_tol"] = c.cg_tol;
    hum["cg_maxiter"] = c.cg_maxiter;
    if (c.epsilon) hum["epsilon"] = *c.epsilon;
    j["hum"] = hum;
    j["observability"] = {{"train", c.obs_train}, {"holdout", c.obs_holdout}};
    j["carleman"] = {{"samples", c.carleman_samples}};
    j["sweep"] = {{"h", c.sweep_h}, {"train", c.sweep_train}, {"holdout", c.sweep_holdout}};
    j["seed"] = c.seed;
    j["output"] = c.output;
    return j.dump(2) + "\n";
}

SweepSettings to_sweep_settings(const ExperimentConfig& c) {
    SweepSettings s;
    s.h_values = c.sweep_h;
    s.depth = c.depth;
    s.max_depth = c.max_depth;
    s.T = c.T;
    s.omega = c.omega;
    s.omega0 = c.omega0;
    s.coefficient_kind = c.coefficient_kind;
    s.a1 = c.a1;
    s.a2 = c.a2;
    s.initial = InitialProfile{c.initial_kind, c.initial_mode, c.initial_amplitude, derive_seed(c.seed, kInitialState)};
    s.lambda = c.lambda;
    s.mu = c.mu;
    s.delta0 = c.delta0;
    s.x0 = c.weight_center();
    s.K = c.K;
    s.eps0 = c.eps0;
    s.c_eps = c.c_eps;
    s.cg_tol = c.cg_tol;
    s.cg_maxiter = c.cg_maxiter;
    s.obs_train = c.sweep_train;
    s.obs_holdout = c.sweep_holdout;
    s.seed = c.seed;
    return s;
}

namespace {

Coefficients make_coefficients(const ExperimentConfig& c, const ScenarioTree& tree, const Mesh& mesh) {
    return Coefficients::make(c.coefficient_kind, tree, mesh, c.a1, c.a2, derive_seed(c.seed, kCoefficients));
}

}  // namespace

HumProblem make_hum_problem(const ExperimentConfig& c) {
    const Mesh mesh = Mesh::build(c.N);
    const ScenarioTree tree = ScenarioTree::build(c.depth, c.T, c.max_depth);
    const InitialProfile profile{c.initial_kind, c.initial_mode, c.initial_amplitude,
                                 derive_seed(c.seed, kInitialState)};
    const double eps = c.epsilon ? *c.epsilon : epsilon_from_rate(c.c_eps, mesh.spacing());
    return HumProblem{mesh,
                      tree,
                      make_coefficients(c, tree, mesh),
                      Region::from_interval(mesh, c.omega),
                      make_initial_state(mesh, profile),
                      eps,
                      c.cg_tol,
                      c.cg_maxiter};
}

CarlemanWeights make_weights(const ExperimentConfig& c, double h) {
    WeightParams wp;
    wp.T = c.T;
    wp.lambda = c.lambda;
    wp.mu = c.mu;
    wp.delta = delta_schedule(h, schedule_threshold(c.eps0, c.delta0, c.T, c.lambda), c.delta0);
    wp.x0 = c.weight_center();
    wp.K = c.K;
    wp.eps0 = c.eps0;
    wp.omega = c.omega;
    wp.omega0 = c.omega0;
    return CarlemanWeights::build(wp);
}

int RunReport::failures() const noexcept {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

std::string RunReport::text() const {
    std::ostringstream out;
    out << "== " << title << " ==\n";
    for (const auto& line : lines) out << line << '\n';
    for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << fmt(c.value) << " (limit " << fmt(c.tolerance)
            << ")\n";
    }
    out << "checks: " << (static_cast<int>(checks.size()) - failures()) << " passed, " << failures() << " failed\n";
    return out.str();
}

namespace {

void check_at_most(RunReport& r, std::string name, double value, double limit) {
    r.checks.push_back({std::move(name), value, limit, value <= limit});
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

GridFunction random_closure_function(const Mesh& mesh, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> values(static_cast<std::size_t>(mesh.interior_count() + 2));
    for (double& x : values) x = d(rng);
    return GridFunction(mesh, std::move(values));
}

}  // namespace

RunReport run_identity_suite(const ExperimentConfig& c) {
    RunReport r;
    r.title = "identities";
    std::mt19937_64 rng(derive_seed(c.seed, kIdentities));
    const std::vector<int> sizes{3, 8, 16, 64};

    int irregular = 0;
    for (int n = 2; n <= 64; ++n) irregular += Mesh::build(n).is_regular() ? 0 : 1;
    check_at_most(r, "mesh regularity failures (N = 2..64)", irregular, 0);

    double leibniz = 0.0, ibp = 0.0;
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int n : sizes) {
        const Mesh mesh = Mesh::build(n);
        const double h = mesh.spacing();
        for (int s = 0; s < 100; ++s) {
            const GridFunction u = random_closure_function(mesh, rng);
            const GridFunction w = random_closure_function(mesh, rng);
            const double su = max_abs(u.values()), sw = max_abs(w.values());
            const LeibnizResiduals lr = leibniz_residuals(u, w);
            leibniz = std::max({leibniz, lr.difference_of_product / (su * sw / h), lr.average_of_product / (su * sw),
                                lr.average_inversion / su});

            std::vector<double> star(static_cast<std::size_t>(n + 1));
            for (double& x : star) x = d(rng);
            const DualGridFunction v(mesh, star);
            const IbpResiduals ir = ibp_residuals(u, v);
            ibp = std::max(ibp, ir.max() / (su * max_abs(v.values()) / h));
        }
    }
    check_at_most(r, "Leibniz identities, scaled residual", leibniz, 1e-12);
    check_at_most(r, "summation by parts, scaled residual", ibp, 1e-12);

    const auto f = [](double x) { return std::sin(std::numbers::pi * x); };
    const std::vector<std::function<double(double)>> derivatives{
        f,
        [](double x) { return std::numbers::pi * std::cos(std::numbers::pi * x); },
        [](double x) { return -std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x); },
    };
    for (const auto& [m, n] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 1}, {2, 0}}) {
        const ConsistencyProbe probe = consistency_probe(f, derivatives[static_cast<std::size_t>(n)], m, n, 1.0 / 16, 4,
                                                         0.25, 0.75);
        double worst = 0.0;
        for (double o : probe.order) worst = std::max(worst, std::abs(o - 2.0));
        check_at_most(r, "consistency order A^" + std::to_string(m) + " D^" + std::to_string(n) + ", |order - 2|",
                      worst, 0.15);
    }

    double tree_residual = 0.0;
    for (int depth = 1; depth <= 10; ++depth) {
        const ScenarioTree tree = ScenarioTree::build(depth, c.T, std::max(depth, c.max_depth));
        for (int k = 0; k <= depth; ++k) {
            double total = 0.0;
            for (std::size_t node = 0; node < ScenarioTree::node_count(k); ++node) total += ScenarioTree::probability(k);
            tree_residual = std::max(tree_residual, std::abs(total - 1.0));
        }
        tree_residual = std::max(tree_residual, std::abs(0.5 * (tree.increment(1) + tree.increment(0))));
        tree_residual = std::max(tree_residual, std::abs(tree.increment(1) * tree.increment(1) - tree.dt()));
        tree_residual = std::max(tree_residual, std::abs(tree.increment(0) * tree.increment(0) - tree.dt()));
        // Tower property: averaging children level by level equals the leaf expectation.
        std::vector<double> leaf(ScenarioTree::node_count(depth));
        for (double& x : leaf) x = d(rng);
        const double direct = expectation(tree, depth, leaf);
        std::vector<double> level = leaf;
        for (int k = depth; k > 0; --k) {
            std::vector<double> up(ScenarioTree::node_count(k - 1));
            for (std::size_t node = 0; node < up.size(); ++node) {
                up[node] = 0.5 * (level[ScenarioTree::child(node, 0)] + level[ScenarioTree::child(node, 1)]);
            }
            level = std::move(up);
        }
        tree_residual = std::max(tree_residual, std::abs(level[0] - direct));
    }
    check_at_most(r, "tree exactness residual (depths 1..10)", tree_residual, 1e-14);

    double duality = 0.0;
    std::uniform_int_distribution<int> pick_n(2, 16), pick_m(1, 10);
    for (int s = 0; s < 20; ++s) {
        const Mesh mesh = Mesh::build(pick_n(rng));
        const ScenarioTree tree = ScenarioTree::build(pick_m(rng), c.T, std::max(10, c.max_depth));
        const int width = mesh.interior_count();
        const Coefficients coeffs = Coefficients::adapted_random(tree, mesh, 0.5, 0.5, rng());
        const Region region = Region::from_interval(mesh, c.omega);
        std::vector<double> y0v(static_cast<std::size_t>(width));
        for (double& x : y0v) x = d(rng);
        const GridFunction y0 = GridFunction::from_interior(mesh, y0v);
        const ControlPair controls = ControlPair::localized(random_adapted_field(tree, width, tree.depth(), rng),
                                                            random_adapted_field(tree, width, tree.depth(), rng), region);
        const LevelField zT = random_level_field(tree.depth(), width, rng);
        const ForwardSolution fwd = solve_forward(y0, controls, coeffs, tree, mesh);
        const BackwardSolution bwd = solve_backward(zT, coeffs, tree, mesh);
        duality = std::max(duality, duality_balance(y0, controls, fwd, bwd, tree, mesh).relative_residual());
    }
    check_at_most(r, "duality identity, relative residual (20 instances)", duality, 1e-10);
    return r;
}

RunReport run_hum_report(const ExperimentConfig& c) {
    RunReport r;
    r.title = "hum";
    const HumProblem problem = make_hum_problem(c);
    const HumSolution sol = solve_hum(problem);
    const BoundsReport b = report_bounds(sol, problem);
    const auto& diag = sol.diagnostics;

    r.lines.push_back("N: " + std::to_string(c.N));
    r.lines.push_back("depth: " + std::to_string(c.depth));
    r.lines.push_back("epsilon: " + fmt(problem.epsilon));
    r.lines.push_back("J(z_T*): " + fmt(diag.J));
    r.lines.push_back("cg_iterations: " + std::to_string(diag.cg_iterations));
    r.lines.push_back("cg_relative_residual: " + fmt(diag.cg_residual));
    r.lines.push_back("rhs_norm: " + fmt(diag.rhs_norm));
    r.lines.push_back("closure_error: " + fmt(diag.closure_error));
    r.lines.push_back("y0_energy: " + fmt(b.y0_energy));
    r.lines.push_back("control_cost: " + fmt(b.control_cost));
    r.lines.push_back("cost_ratio: " + fmt(b.cost_ratio));
    r.lines.push_back("terminal_energy: " + fmt(b.terminal_energy));
    r.lines.push_back("terminal_ratio: " + fmt(b.terminal_ratio));
    r.lines.push_back("terminal_over_eps_ratio: " + fmt(b.terminal_over_eps_ratio));

    check_at_most(r, "closure error |y(T) - eps z_T*|", diag.closure_error,
                  10.0 * std::max(diag.cg_residual, c.cg_tol) * diag.rhs_norm);
    const double eps2 = problem.epsilon * problem.epsilon * b.zT_energy;
    check_at_most(r, "E|y(T)|^2 vs eps^2 E|z_T*|^2, relative gap",
                  std::abs(b.terminal_energy - eps2) / std::max(b.terminal_energy, std::numeric_limits<double>::min()),
                  1e-6);
    return r;
}

RunReport run_observability(const ExperimentConfig& c) {
    RunReport r;
    r.title = "observability";
    const Mesh mesh = Mesh::build(c.N);
    const ScenarioTree tree = ScenarioTree::build(c.depth, c.T, c.max_depth);
    const Coefficients coeffs = make_coefficients(c, tree, mesh);
    const Region region = Region::from_interval(mesh, c.omega);
    const std::uint64_t seed = derive_seed(c.seed, kObservability);
    const auto train = random_terminal_family(tree, mesh, c.obs_train, seed, 0);
    const auto holdout =
        random_terminal_family(tree, mesh, c.obs_holdout, seed, static_cast<std::uint64_t>(c.obs_train));
    const FittedConstant fit = observability_sample(train, holdout, coeffs, region, tree, mesh, c.c_eps);

    r.lines.push_back("train: " + std::to_string(fit.train));
    r.lines.push_back("holdout: " + std::to_string(fit.holdout));
    r.lines.push_back("excluded: " + std::to_string(fit.excluded));
    r.lines.push_back("kappa: " + fmt(fit.kappa));
    r.lines.push_back("C (span fit): " + fmt(fit.c));
    r.lines.push_back("C (training sample max): " + fmt(fit.c_sample_max));
    r.lines.push_back("holdout max ratio: " + fmt(fit.holdout_max_ratio));
    r.lines.push_back("C with h^-2 kappa: " + fmt(fit.c_h2));
    r.lines.push_back("C with h^-2 kappa (sample max): " + fmt(fit.c_h2_sample_max));
    r.lines.push_back("holdout violations with h^-2 kappa: " + std::to_string(fit.holdout_violations_h2));

    r.checks.push_back({"fitted C finite", fit.c, 0.0, std::isfinite(fit.c) && fit.c >= 0.0});
    check_at_most(r, "holdout violations", fit.holdout_violations, 0);
    return r;
}

RunReport run_carleman(const ExperimentConfig& c) {
    RunReport r;
    r.title = "carleman";
    const ScenarioTree tree = ScenarioTree::build(c.depth, c.T, c.max_depth);
    const std::uint64_t seed = derive_seed(c.seed, kCarleman);

    std::vector<double> maxima;
    for (int n : {c.N, 2 * c.N + 1}) {
        const Mesh mesh = Mesh::build(n);
        const CarlemanWeights weights = make_weights(c, mesh.spacing());
        const CarlemanStudy study =
            carleman_study(weights, Region::from_interval(mesh, c.omega), tree, mesh, c.carleman_samples, seed);
        r.lines.push_back("N = " + std::to_string(n) + ": delta " + fmt(weights.params().delta) + ", max ratio " +
                          fmt(study.max_ratio) + ", min ratio " + fmt(study.min_ratio));
        r.checks.push_back({"max LHS/RHS finite (N = " + std::to_string(n) + ")", study.max_ratio, 0.0,
                            std::isfinite(study.max_ratio)});
        maxima.push_back(study.max_ratio);
    }
    const double growth = std::max(maxima[1] / maxima[0], maxima[0] / maxima[1]);
    check_at_most(r, "max ratio change across one refinement (factor)", growth, 5.0);
    return r;
}

SweepReport run_sweep(const ExperimentConfig& c) {
    SweepReport out;
    RunReport& r = out.report;
    r.title = "sweep";
    out.rows = h_sweep(to_sweep_settings(c));

    double previous = std::numeric_limits<double>::infinity();
    double increase = 0.0;
    double max_cost = 0.0;
    int used = 0;
    for (const SweepRow& row : out.rows) {
        if (row.skipped) {
            r.lines.push_back("h = " + fmt(row.h) + " skipped: " + row.reason);
            continue;
        }
        ++used;
        increase = std::max(increase, row.term_ratio - previous);
        previous = row.term_ratio;
        max_cost = std::max(max_cost, row.cost_ratio);
    }
    r.lines.push_back("rows: " + std::to_string(out.rows.size()) + " (" + std::to_string(used) + " solved)");
    r.lines.push_back("max cost ratio: " + fmt(max_cost));
    check_at_most(r, "terminal ratio increase along 1/h", increase, 0.0);
    if (used >= 2) {
        const double slope = decay_slope(out.rows);
        r.lines.push_back("decay slope of log(terminal ratio) vs 1/h: " + fmt(slope));
        r.checks.push_back({"decay slope negative", slope, 0.0, slope < 0.0});
    }
    return out;
}

std::string format_csv(const std::vector<SweepRow>& rows) {
    std::string out = "h,delta,lambda,mu,N,depth,eps,obs_C,term_ratio,cost_ratio,cg_iters,closure_err,skipped,reason\n";
    for (const SweepRow& row : rows) {
        std::string reason = row.reason;
        std::replace_if(reason.begin(), reason.end(), [](char ch) { return ch == ',' || ch == '\n' || ch == '\r'; }, ';');
        out += shortest(row.h) + ',' + shortest(row.delta) + ',' + shortest(row.lambda) + ',' + shortest(row.mu) + ',' +
               std::to_string(row.N) + ',' + std::to_string(row.depth) + ',' + shortest(row.eps) + ',' +
               shortest(row.obs_C) + ',' + shortest(row.term_ratio) + ',' + shortest(row.cost_ratio) + ',' +
               std::to_string(row.cg_iters) + ',' + shortest(row.closure_err) + ',' + (row.skipped ? "1" : "0") + ',' +
               reason + '\n';
    }
    return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::string text = format_csv(rows);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace stocnull

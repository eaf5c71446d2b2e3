#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "stocnull/errors.hpp"
#include "stocnull/forward_solver.hpp"
#include "stocnull/parallel.hpp"

using namespace stocnull;

namespace {

double l2(std::span<const double> v, double h) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(h * s);
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_SUITE("forward_solver") {
    TEST_CASE("single steps") {
        const Mesh m = Mesh::build(8);
        const Region all = Region::everywhere(m);
        const std::vector<double> zero(8, 0.0);
        GridFunction y(m), u(m), v(m);
        CHECK(max_abs(forward_step(y, u, v, zero, zero, all, 0.1, 0.3).values()) == 0.0);

        std::mt19937_64 rng(2);
        const auto yk = GridFunction::from_interior(m, oracle::uniform_vector(8, rng));
        const GridFunction next = forward_step(yk, u, v, zero, zero, all, 0.1, 0.3);
        CHECK(l2(next.interior(), m.spacing()) <= l2(yk.interior(), m.spacing()));

        GridFunction ej(m);
        ej[3] = 2.0;
        const GridFunction single = forward_step(y, u, ej, zero, zero, all, 0.1, -0.3);
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(8, 2) * 2.0 * -0.3;
        const Eigen::VectorXd expect = oracle::step_matrix(m, 0.1, zero).lu().solve(e);
        for (int i = 1; i <= 8; ++i) CHECK(single[i] == doctest::Approx(expect(i - 1)).epsilon(1e-12));
    }

    TEST_CASE("matches the dense oracle with adapted coefficients") {
        std::mt19937_64 rng(4);
        const Mesh m = Mesh::build(6);
        const ScenarioTree t = ScenarioTree::build(5, 1.0);
        const Coefficients c = Coefficients::adapted_random(t, m, 1.5, 0.8, 17);
        const Region r = Region::from_interval(m, {0.2, 0.6});
        const auto y0 = oracle::uniform_vector(6, rng);
        const AdaptedField u = random_adapted_field(t, 6, 5, rng), v = random_adapted_field(t, 6, 5, rng);
        const ForwardSolution s = solve_forward(GridFunction::from_interior(m, y0), &u, &v, r, c, t, m);
        const AdaptedField o = oracle::forward(y0, &u, &v, r, c, t, m);
        CHECK(max_diff(s.state.data(), o.data()) <= 1e-12 * max_abs(o.data()));
    }

    TEST_CASE("superposition") {
        std::mt19937_64 rng(6);
        const Mesh m = Mesh::build(9);
        const ScenarioTree t = ScenarioTree::build(6, 1.0);
        const Coefficients c = Coefficients::sinusoid(t, m, 0.7, 0.4);
        const Region r = Region::from_interval(m, {0.3, 0.7});
        const auto y0 = GridFunction::from_interior(m, oracle::uniform_vector(9, rng));
        const ControlPair ctl = ControlPair::localized(random_adapted_field(t, 9, 6, rng), random_adapted_field(t, 9, 6, rng), r);
        const auto full = solve_forward(y0, ctl, c, t, m);
        const auto free = solve_free(y0, c, t, m);
        const auto forced = solve_forward(GridFunction(m), ctl, c, t, m);
        double worst = 0.0;
        for (std::size_t i = 0; i < full.state.data().size(); ++i) {
            worst = std::max(worst, std::abs(full.state.data()[i] - free.state.data()[i] - forced.state.data()[i]));
        }
        CHECK(worst <= 1e-12 * max_abs(full.state.data()));
    }

    TEST_CASE("first sine mode decays at the implicit Euler rate") {
        for (int depth : {1, 5}) {
            const Mesh m = Mesh::build(15);
            const double h = m.spacing();
            const ScenarioTree t = ScenarioTree::build(depth, 0.5);
            const auto y0 = GridFunction::from_function(m, [](double x) { return std::sin(std::numbers::pi * x); });
            const auto sol = solve_free(y0, Coefficients::zero(t, m), t, m);
            const double lambda1 = 4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2), 2);
            const double factor = std::pow(1.0 + t.dt() * lambda1, -depth);
            const LevelField yT = sol.terminal();
            for (std::size_t leaf = 0; leaf < yT.nodes(); ++leaf) {
                for (int i = 1; i <= 15; ++i) {
                    CHECK(yT.node(leaf)[static_cast<std::size_t>(i - 1)] == doctest::Approx(factor * y0[i]).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("multiplicative noise spreads the leaves") {
        const Mesh m = Mesh::build(5);
        const ScenarioTree t = ScenarioTree::build(2, 1.0);
        const auto y0 = GridFunction::from_function(m, [](double x) { return x * (1 - x); });
        const auto yT = solve_free(y0, Coefficients::constant(t, m, 0.0, 3.0), t, m).terminal();
        double mean = 0.0, var = 0.0;
        for (std::size_t n = 0; n < 4; ++n) mean += 0.25 * yT.node(n)[2];
        for (std::size_t n = 0; n < 4; ++n) var += 0.25 * std::pow(yT.node(n)[2] - mean, 2);
        CHECK(var > 0.0);
    }

    TEST_CASE("adaptedness: future perturbations leave the past unchanged") {
        std::mt19937_64 rng(8);
        const Mesh m = Mesh::build(6);
        const ScenarioTree t = ScenarioTree::build(6, 1.0);
        const Coefficients c = Coefficients::constant(t, m, 0.3, 0.6);
        const Region r = Region::everywhere(m);
        const auto y0 = GridFunction::from_interior(m, oracle::uniform_vector(6, rng));
        AdaptedField u = random_adapted_field(t, 6, 6, rng), v = random_adapted_field(t, 6, 6, rng);
        const auto before = solve_forward(y0, &u, &v, r, c, t, m);
        const int k = 3;
        for (int level = k; level < 6; ++level) {
            for (double& x : u.level(level)) x += 1.0;
            for (double& x : v.level(level)) x -= 2.0;
        }
        const auto after = solve_forward(y0, &u, &v, r, c, t, m);
        for (int level = 0; level <= k; ++level) {
            CHECK(max_diff(before.state.level(level), after.state.level(level)) == 0.0);
        }
        CHECK(max_diff(before.state.level(k + 1), after.state.level(k + 1)) > 0.0);
    }

    TEST_CASE("mean dynamics follow the deterministic scheme") {
        std::mt19937_64 rng(10);
        const Mesh m = Mesh::build(7);
        const ScenarioTree t = ScenarioTree::build(6, 1.0);
        const Coefficients noisy = Coefficients::constant(t, m, 0.4, 0.0);
        const auto y0 = GridFunction::from_interior(m, oracle::uniform_vector(7, rng));
        const AdaptedField v = random_adapted_field(t, 7, 6, rng);
        const auto sol = solve_forward(y0, nullptr, &v, Region::everywhere(m), noisy, t, m);
        const auto det = solve_free(y0, noisy, t, m);
        for (int k = 0; k <= 6; ++k) {
            for (int i = 0; i < 7; ++i) {
                std::vector<double> col(ScenarioTree::node_count(k));
                for (std::size_t n = 0; n < col.size(); ++n) col[n] = sol.state.node(k, n)[static_cast<std::size_t>(i)];
                CHECK(expectation(t, k, col) == doctest::Approx(det.state.node(k, 0)[static_cast<std::size_t>(i)]).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("energy stays bounded with multiplicative noise") {
        const Mesh m = Mesh::build(7);
        const ScenarioTree t = ScenarioTree::build(8, 1.0);
        const auto y0 = GridFunction::from_function(m, [](double x) { return std::sin(std::numbers::pi * x); });
        const auto sol = solve_free(y0, Coefficients::constant(t, m, 0.5, 0.5), t, m);
        const double e0 = tree_inner(sol.state, sol.state, 0, m.spacing());
        const double A = 1.0;
        for (int k = 1; k <= 8; ++k) {
            const double ek = tree_inner(sol.state, sol.state, k, m.spacing());
            CHECK(std::isfinite(ek));
            CHECK(ek <= std::exp(2 * (1 + A) * t.time(k)) * e0);
        }
    }

    TEST_CASE("dominance and thread independence") {
        const Mesh m = Mesh::build(10);
        const ScenarioTree t = ScenarioTree::build(2, 1.0);
        CHECK_THROWS_AS(check_dominance(Coefficients::constant(t, m, 2.5, 0.0), t), InvalidArgument);

        const ScenarioTree deep = ScenarioTree::build(9, 1.0);
        std::mt19937_64 rng(12);
        const auto y0 = GridFunction::from_interior(m, oracle::uniform_vector(10, rng));
        const Coefficients c = Coefficients::adapted_random(deep, m, 0.5, 0.5, 3);
        const AdaptedField v = random_adapted_field(deep, 10, 9, rng);
        set_thread_count(1);
        const auto one = solve_forward(y0, nullptr, &v, Region::everywhere(m), c, deep, m);
        set_thread_count(4);
        const auto four = solve_forward(y0, nullptr, &v, Region::everywhere(m), c, deep, m);
        set_thread_count(1);
        CHECK(std::equal(one.state.data().begin(), one.state.data().end(), four.state.data().begin()));
    }

    TEST_CASE("region indicator and localized controls") {
        const Mesh m = Mesh::build(9);
        const Region r = Region::from_interval(m, {0.3, 0.7});
        CHECK(r.count() == 3);  // 0.4, 0.5, 0.6
        CHECK(r.contains(4));
        CHECK_FALSE(r.contains(3));
        CHECK_FALSE(r.contains(7));
        const ScenarioTree t = ScenarioTree::build(2, 1.0);
        std::mt19937_64 rng(1);
        const auto ctl = ControlPair::localized(random_adapted_field(t, 9, 2, rng), random_adapted_field(t, 9, 2, rng), r);
        for (int k = 0; k < 2; ++k) {
            for (std::size_t n = 0; n < ScenarioTree::node_count(k); ++n) {
                for (int i = 1; i <= 9; ++i) {
                    if (!r.contains(i)) CHECK(ctl.u.node(k, n)[static_cast<std::size_t>(i - 1)] == 0.0);
                }
            }
        }
        CHECK(coefficient_kind_from_string(to_string(CoefficientKind::adapted_random)) == CoefficientKind::adapted_random);
        CHECK_THROWS(coefficient_kind_from_string("bogus"));
    }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>
#include <random>

#include "oracles.hpp"
#include "stocnull/errors.hpp"
#include "stocnull/inequalities.hpp"

using namespace stocnull;

namespace {

CarlemanWeights weights_for(double h, double T = 1.0, double lambda = 2.0, double delta0 = 0.4) {
    WeightParams p;
    p.T = T;
    p.lambda = lambda;
    p.delta = delta_schedule(h, schedule_threshold(1.0, delta0, T, lambda), delta0);
    return CarlemanWeights::build(p);
}

}  // namespace

TEST_SUITE("inequalities") {
    TEST_CASE("log-space sums") {
        LogSum s;
        CHECK(s.zero());
        CHECK(s.value() == 0.0);
        s.add_log(std::log(2.0));
        s.add_log(std::log(3.0));
        s.add_log(-std::numeric_limits<double>::infinity());
        CHECK(s.value() == doctest::Approx(5.0).epsilon(1e-15));
        LogSum big;
        big.add_log(-5000.0);
        big.add_log(-5000.0 + std::log(3.0));
        CHECK(big.value() == 0.0);  // underflows, the log does not
        CHECK(big.log() == doctest::Approx(-5000.0 + std::log(4.0)).epsilon(1e-15));
        s.add(big);
        CHECK(s.value() == doctest::Approx(5.0).epsilon(1e-15));
    }

    TEST_CASE("zero solution gives zero terms") {
        const Mesh m = Mesh::build(8);
        const ScenarioTree t = ScenarioTree::build(4, 1.0);
        const WSolution w = solve_w_equation(LevelField(4, 8), AdaptedField::per_step(t, 8), t, m);
        const CarlemanTerms terms = carleman_terms(w.w, w.sources, weights_for(m.spacing()), Region::from_interval(m, {0.3, 0.7}), t, m);
        for (const LogSum* s : {&terms.state, &terms.gradient, &terms.observed, &terms.diffusion, &terms.drift,
                                &terms.initial, &terms.terminal}) {
            CHECK(s->zero());
        }
        CHECK(terms.ratio() == 0.0);
    }

    TEST_CASE("stationary deterministic w, two points, one step") {
        const Mesh m = Mesh::build(2);
        const double h = m.spacing();
        const ScenarioTree t = ScenarioTree::build(1, 1.0);
        WeightParams p;
        p.lambda = 1.2;
        p.delta = 0.45;
        const CarlemanWeights wts = CarlemanWeights::build(p);
        const Region region = Region::from_interval(m, {0.3, 0.7});

        // Backward step w_0 = M^{-T} w_1 - dt f; choose f so that w_0 = w_1.
        const std::vector<double> wv{0.7, -0.4};
        const std::vector<double> zero(2, 0.0);
        const Eigen::VectorXd solved = oracle::step_matrix(m, 1.0, zero).transpose().lu().solve(oracle::to_vector(wv));
        AdaptedField f = AdaptedField::per_step(t, 2);
        for (int i = 0; i < 2; ++i) f.node(0, 0)[static_cast<std::size_t>(i)] = solved(i) - wv[static_cast<std::size_t>(i)];
        LevelField wT(1, 2);
        for (std::size_t n = 0; n < 2; ++n) std::copy(wv.begin(), wv.end(), wT.node(n).begin());

        const WSolution sol = solve_w_equation(wT, f, t, m);
        for (int i = 0; i < 2; ++i) CHECK(sol.w.node(0, 0)[static_cast<std::size_t>(i)] == doctest::Approx(wv[static_cast<std::size_t>(i)]).epsilon(1e-14));
        const CarlemanTerms terms = carleman_terms(sol.w, sol.sources, wts, region, t, m);

        // Hand quadrature in log space: exp(2 s phi) underflows here.
        const double s0 = wts.s(0.0), sT = wts.s(1.0);
        std::vector<double> state, grad, observed, drift, initial, terminal;
        for (int i = 1; i <= 2; ++i) {
            const double lw2 = std::log(wv[static_cast<std::size_t>(i - 1)] * wv[static_cast<std::size_t>(i - 1)]);
            const double e0 = 2 * s0 * wts.phi(m.point(i));
            state.push_back(std::log(h) + 3 * std::log(s0) + e0 + lw2);
            if (region.contains(i)) observed.push_back(state.back());
            drift.push_back(std::log(h) + e0 + std::log(std::pow(f.node(0, 0)[static_cast<std::size_t>(i - 1)], 2)));
            initial.push_back(-std::log(h) + e0 + lw2);
            terminal.push_back(-std::log(h) + 2 * sT * wts.phi(m.point(i)) + lw2);
        }
        const double padded[4] = {0.0, wv[0], wv[1], 0.0};
        for (int j = 0; j <= 2; ++j) {
            const double d = (padded[j + 1] - padded[j]) / h;
            grad.push_back(std::log(h) + std::log(s0) + 2 * s0 * wts.phi(m.dual_point(j)) + std::log(d * d));
        }
        const auto lse = [](std::vector<double> logs) {
            const double top = *std::max_element(logs.begin(), logs.end());
            double sum = 0.0;
            for (double l : logs) sum += std::exp(l - top);
            return top + std::log(sum);
        };
        const auto close = [](double got, double want) { return std::abs(got - want) <= 1e-12 * std::abs(want); };
        CHECK(close(terms.state.log(), lse(state)));
        CHECK(close(terms.gradient.log(), lse(grad)));
        CHECK(close(terms.observed.log(), lse(observed)));
        CHECK(close(terms.drift.log(), lse(drift)));
        CHECK(terms.diffusion.zero());
        CHECK(close(terms.initial.log(), lse(initial)));
        CHECK(close(terms.terminal.log(), lse(terminal)));
        std::vector<double> left = state, right = observed;
        left.insert(left.end(), grad.begin(), grad.end());
        for (const auto* part : {&drift, &initial, &terminal}) right.insert(right.end(), part->begin(), part->end());
        CHECK(std::log(terms.ratio()) == doctest::Approx(lse(left) - lse(right)).epsilon(1e-10));
        CHECK(std::isfinite(terms.ratio()));
    }

    TEST_CASE("terms are quadratic") {
        std::mt19937_64 rng(2);
        const Mesh m = Mesh::build(9);
        const ScenarioTree t = ScenarioTree::build(5, 1.0);
        const LevelField wT = random_level_field(5, 9, rng);
        const AdaptedField f = random_adapted_field(t, 9, 5, rng);
        LevelField wT2 = wT;
        AdaptedField f2 = f;
        for (double& x : wT2.data()) x *= 2;
        for (double& x : f2.data()) x *= 2;
        const auto weights = weights_for(m.spacing());
        const Region r = Region::from_interval(m, {0.3, 0.7});
        const WSolution a = solve_w_equation(wT, f, t, m), b = solve_w_equation(wT2, f2, t, m);
        const CarlemanTerms ta = carleman_terms(a.w, a.sources, weights, r, t, m);
        const CarlemanTerms tb = carleman_terms(b.w, b.sources, weights, r, t, m);
        const LogSum* sa[] = {&ta.state, &ta.gradient, &ta.observed, &ta.diffusion, &ta.drift, &ta.initial, &ta.terminal};
        const LogSum* sb[] = {&tb.state, &tb.gradient, &tb.observed, &tb.diffusion, &tb.drift, &tb.initial, &tb.terminal};
        for (int i = 0; i < 7; ++i) {
            CHECK(sb[i]->log() - sa[i]->log() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
            CHECK(sa[i]->value() >= 0.0);
        }
    }

    TEST_CASE("regime rejection names the ratio") {
        const Mesh m = Mesh::build(3);  // h = 0.25
        const ScenarioTree t = ScenarioTree::build(2, 1.0);
        WeightParams p;
        p.lambda = 10;
        p.delta = 0.25;  // ratio 10
        const CarlemanWeights w = CarlemanWeights::build(p);
        const WSolution s = solve_w_equation(LevelField(2, 3), AdaptedField::per_step(t, 3), t, m);
        try {
            carleman_terms(s.w, s.sources, w, Region::from_interval(m, {0.3, 0.7}), t, m);
            FAIL("expected rejection");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("10") != std::string::npos);
        }
    }

    TEST_CASE("Carleman ratio study is finite and deterministic") {
        const Mesh m = Mesh::build(8);
        const ScenarioTree t = ScenarioTree::build(6, 1.0);
        const auto w = weights_for(m.spacing());
        const Region r = Region::from_interval(m, {0.3, 0.7});
        const CarlemanStudy a = carleman_study(w, r, t, m, 20, 5), b = carleman_study(w, r, t, m, 20, 5);
        CHECK(a.ratios == b.ratios);
        CHECK(std::isfinite(a.max_ratio));
        CHECK(a.min_ratio > 0.0);
        CHECK(a.min_ratio <= a.max_ratio);
    }

    TEST_CASE("observability: exclusions, deterministic sub-case, scaling") {
        const Mesh m = Mesh::build(8);
        const ScenarioTree t = ScenarioTree::build(6, 1.0);
        const Coefficients c = Coefficients::constant(t, m, 0.5, 0.5);
        const Region r = Region::from_interval(m, {0.3, 0.7});
        auto train = random_terminal_family(t, m, 10, 3);
        auto holdout = random_terminal_family(t, m, 10, 3, 10);
        train.push_back(LevelField(6, 8));
        const FittedConstant fit = observability_sample(train, holdout, c, r, t, m, 0.6);
        CHECK(fit.excluded == 1);
        CHECK(fit.train == 10);
        CHECK(fit.c >= fit.c_sample_max);
        CHECK(fit.holdout_violations == 0);
        for (const auto& rec : fit.train_records) {
            CHECK(rec.lhs >= 0.0);
            CHECK(rec.diffusion >= 0.0);
            CHECK(rec.observed >= 0.0);
            CHECK(rec.terminal >= 0.0);
        }

        for (double alpha : {2.0, 0.5, 3.0}) {
            auto scaled = train;
            auto scaled_hold = holdout;
            for (auto& f : scaled) for (double& x : f.data()) x *= alpha;
            for (auto& f : scaled_hold) for (double& x : f.data()) x *= alpha;
            const FittedConstant g = observability_sample(scaled, scaled_hold, c, r, t, m, 0.6);
            CHECK(std::abs(g.c_sample_max - fit.c_sample_max) <= 1e-13 * fit.c_sample_max);
            CHECK(std::abs(g.c - fit.c) <= 1e-13 * fit.c);
            for (std::size_t i = 0; i < g.train_records.size(); ++i) {
                const double a = fit.train_records[i].lhs / fit.train_records[i].rhs(fit.kappa);
                const double b = g.train_records[i].lhs / g.train_records[i].rhs(g.kappa);
                CHECK(std::abs(a - b) <= 1e-13 * a);
            }
        }

        // Deterministic data, no a2, full observation: no martingale part.
        const Coefficients det = Coefficients::constant(t, m, 0.5, 0.0);
        const Region all = Region::from_interval(m, {0.0, 1.0});
        LevelField zT(6, 8);
        for (std::size_t n = 0; n < zT.nodes(); ++n) {
            for (int i = 0; i < 8; ++i) zT.node(n)[static_cast<std::size_t>(i)] = std::sin(0.9 * i + 0.1);
        }
        const ObservabilityRecord rec = observability_record(zT, det, all, t, m);
        CHECK(rec.diffusion == 0.0);
        CHECK(rec.observed > 0.0);
        CHECK(std::isfinite(rec.lhs / rec.rhs(std::exp(-0.6 / m.spacing()))));
    }

    TEST_CASE("h sweep rows") {
        SweepSettings s;
        s.c_eps = 0.6;
        s.depth = 6;
        s.obs_train = 5;
        s.obs_holdout = 5;
        s.h_values = {1.0 / 8};
        CHECK(h_sweep(s).size() == 1);

        s.h_values = {1.0 / 8, 1.0 / 12, 1.0 / 16};
        const auto rows = h_sweep(s);
        REQUIRE(rows.size() == 3);
        for (const auto& r : rows) CHECK_FALSE(r.skipped);
        CHECK(rows[1].term_ratio <= rows[0].term_ratio);
        CHECK(rows[2].term_ratio <= rows[1].term_ratio);
        CHECK(decay_slope(rows) < 0.0);
        CHECK(rows[0].delta == doctest::Approx(0.25));
        CHECK(rows[0].eps == doctest::Approx(std::exp(-0.6 * 8)));

        s.h_values = {0.25, 0.26, 1.0 / 9};
        const auto odd = h_sweep(s);
        CHECK(odd[0].skipped);
        CHECK(odd[0].reason.find("threshold") != std::string::npos);
        CHECK(odd[1].skipped);
        CHECK_FALSE(odd[2].skipped);
    }

    TEST_CASE("decay slope of synthetic rows") {
        std::vector<SweepRow> rows(3);
        for (int i = 0; i < 3; ++i) {
            rows[static_cast<std::size_t>(i)].h = 1.0 / (8 + 4 * i);
            rows[static_cast<std::size_t>(i)].term_ratio = std::exp(-0.5 * (8 + 4 * i));
        }
        CHECK(decay_slope(rows) == doctest::Approx(-0.5));
        rows[1].skipped = true;
        CHECK(decay_slope(rows) == doctest::Approx(-0.5));
        CHECK(std::isnan(decay_slope({})));
    }
}

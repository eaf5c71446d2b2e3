#include <doctest.h>

#include <cmath>

#include <vector>

#include "stocnull/errors.hpp"
#include "stocnull/mesh.hpp"

using namespace stocnull;

TEST_SUITE("mesh") {
    TEST_CASE("N = 3 spacing, interior and closure") {
        const Mesh m = Mesh::build(3);
        CHECK(m.spacing() == 0.25);
        CHECK(m.interior().coordinates() == std::vector<double>{0.25, 0.5, 0.75});
        CHECK(m.closure().coordinates() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
        CHECK(m.boundary().coordinates() == std::vector<double>{0.0, 1.0});
    }

    TEST_CASE("N = 2 interior") {
        const Mesh m = Mesh::build(2);
        CHECK(m.spacing() == doctest::Approx(1.0 / 3).epsilon(1e-15));
        const auto x = m.interior().coordinates();
        REQUIRE(x.size() == 2);
        CHECK(x[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
        CHECK(x[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
    }

    TEST_CASE("N < 2 is rejected") {
        CHECK_THROWS_AS(Mesh::build(1), InvalidArgument);
        CHECK_THROWS_AS(Mesh::build(0), InvalidArgument);
    }

    TEST_CASE("dual meshes by set algebra") {
        const DualMesh d3 = dual_of(Mesh::build(3));
        CHECK(d3.star.coordinates() == std::vector<double>{0.125, 0.375, 0.625, 0.875});
        CHECK(d3.prime.coordinates() == std::vector<double>{0.375, 0.625});

        const DualMesh d2 = dual_of(Mesh::build(2));
        const auto star = d2.star.coordinates();
        REQUIRE(star.size() == 3);
        CHECK(star[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
        CHECK(star[1] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(star[2] == doctest::Approx(5.0 / 6).epsilon(1e-15));
        CHECK(d2.prime.coordinates() == std::vector<double>{0.5});
    }

    TEST_CASE("star contains prime, cardinalities, regularity") {
        for (int n = 2; n <= 40; ++n) {
            const Mesh m = Mesh::build(n);
            const DualMesh d = m.dual();
            CHECK(d.star.size() == static_cast<std::size_t>(n + 1));
            CHECK(d.prime.size() == static_cast<std::size_t>(n - 1));
            CHECK(set_intersection(d.star, d.prime) == d.prime);
            CHECK(m.interior().bar().ring() == m.interior());
            CHECK(m.is_regular());
            CHECK(m.interior().bar() == m.closure());
            CHECK(set_difference(m.interior().bar(), m.interior()) == m.boundary());
        }
    }

    TEST_CASE("outward normals and traces at the boundary") {
        const Mesh m = Mesh::build(3);
        const auto samples = m.boundary_samples();
        CHECK(samples[0].point == 0.0);
        CHECK(samples[0].normal == -1);
        CHECK(samples[1].point == 1.0);
        CHECK(samples[1].normal == 1);
        const std::vector<double> star{10.0, 11.0, 12.0, 13.0};
        CHECK(samples[0].trace_of(star) == 10.0);
        CHECK(samples[1].trace_of(star) == 13.0);
        // Interior points have no normal.
        CHECK(outward_normal(m.interior(), 4) == 0);
    }

    TEST_CASE("integration examples") {
        const Mesh m = Mesh::build(3);
        CHECK(integrate(m.interior(), std::vector<double>{1.0, 1.0, 1.0}) == 0.75);
        CHECK(integrate(m.interior(), std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
        CHECK(integrate_boundary(std::vector<double>{2.0, 3.0}) == 5.0);
        CHECK_THROWS_AS(integrate(m.interior(), std::vector<double>{1.0}), InvalidArgument);
    }

    TEST_CASE("integration is linear") {
        const Mesh m = Mesh::build(16);
        std::vector<double> u(16), v(16), w(16);
        for (int i = 0; i < 16; ++i) {
            u[static_cast<std::size_t>(i)] = std::sin(0.3 * i);
            v[static_cast<std::size_t>(i)] = std::cos(1.7 * i);
            w[static_cast<std::size_t>(i)] = 2.5 * u[static_cast<std::size_t>(i)] - 0.75 * v[static_cast<std::size_t>(i)];
        }
        const double lhs = integrate(m.interior(), w);
        const double rhs = 2.5 * integrate(m.interior(), u) - 0.75 * integrate(m.interior(), v);
        CHECK(std::abs(lhs - rhs) <= 1e-14 * std::max(1.0, std::abs(rhs)));
    }
}

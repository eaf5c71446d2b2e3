#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace stocnull {

// Open interval (lo, hi) of the unit domain.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double x) const noexcept { return lo < x && x < hi; }
    bool contains_closure_of(const Interval& inner) const noexcept {
        return lo < inner.lo && inner.hi < hi;
    }
    bool valid() const noexcept { return lo < hi; }
    bool operator==(const Interval&) const = default;
};

/**
 * A finite set of mesh points stored as integer half-units: a point with
 * half-unit k sits at x = k * h / 2. Primal points have even k, dual
 * (half-)points odd k. Set algebra is therefore exact.
 */
class PointSet {
public:
    PointSet() = default;
    PointSet(double h, std::vector<int> half_units);

    // Primal points x_first .. x_last (inclusive).
    static PointSet primal_range(double h, int first, int last);

    double spacing() const noexcept { return h_; }
    std::size_t size() const noexcept { return half_.size(); }
    bool empty() const noexcept { return half_.empty(); }
    std::span<const int> half_units() const noexcept { return half_; }

    bool contains(int half_unit) const;
    double coordinate(std::size_t index) const { return half_[index] * 0.5 * h_; }
    std::vector<double> coordinates() const;

    // tau_+ (direction = +1) or tau_- (direction = -1).
    PointSet shifted(int direction) const;
    PointSet star() const;   // tau_+ u tau_-
    PointSet prime() const;  // tau_+ n tau_-
    PointSet bar() const { return star().star(); }
    PointSet ring() const { return prime().prime(); }

    friend PointSet set_union(const PointSet& a, const PointSet& b);
    friend PointSet set_intersection(const PointSet& a, const PointSet& b);
    friend PointSet set_difference(const PointSet& a, const PointSet& b);

    bool operator==(const PointSet& other) const { return half_ == other.half_; }

private:
    double h_ = 0.0;
    std::vector<int> half_;
};

// Outward normal of `set` at the point with the given half-unit:
// +1 if only the left half-neighbour lies in set*, -1 if only the right one does.
int outward_normal(const PointSet& set, int half_unit);

struct DualMesh {
    PointSet star;   // N + 1 half-points x_{1/2} .. x_{N+1/2}
    PointSet prime;  // N - 1 half-points x_{3/2} .. x_{N-1/2}
};

struct BoundarySample {
    int half_unit = 0;
    double point = 0.0;
    int normal = 0;

    // t_r(v): the value of a star-mesh function at the half-point adjacent to
    // this boundary point on the inside. `star_values` is indexed like DualMesh::star.
    double trace_of(std::span<const double> star_values) const;
};

/**
 * Uniform mesh of (0, 1) with N interior points x_i = i h, h = 1 / (N + 1).
 * Closure indices run 0 .. N + 1; dual (star) index j denotes x_{j + 1/2}.
 */
class Mesh {
public:
    static Mesh build(int interior_count);

    int interior_count() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    // Correctly rounded i / (N + 1), so region membership near an endpoint
    // like 0.3 agrees with the decimal literal.
    double point(int i) const noexcept { return i / static_cast<double>(n_ + 1); }
    double dual_point(int j) const noexcept { return (2 * j + 1) / (2.0 * (n_ + 1)); }

    PointSet interior() const;
    PointSet closure() const;
    PointSet boundary() const;
    DualMesh dual() const;
    std::array<BoundarySample, 2> boundary_samples() const;

    // ring(bar(M)) == M.
    bool is_regular() const;

    bool operator==(const Mesh& other) const noexcept { return n_ == other.n_; }

private:
    Mesh(int n, double h) : n_(n), h_(h) {}

    int n_ = 0;
    double h_ = 0.0;
};

inline DualMesh dual_of(const Mesh& mesh) { return mesh.dual(); }

// h * sum over the part. Throws InvalidArgument when sizes differ.
double integrate(const PointSet& part, std::span<const double> values);
// Plain sum over boundary points, no h factor.
double integrate_boundary(std::span<const double> values);

}  // namespace stocnull

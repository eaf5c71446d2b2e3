#include "stocnull/mesh.hpp"

#include <algorithm>
#include <iterator>
#include <string>

#include "stocnull/errors.hpp"

namespace stocnull {

PointSet::PointSet(double h, std::vector<int> half_units) : h_(h), half_(std::move(half_units)) {
    std::sort(half_.begin(), half_.end());
    half_.erase(std::unique(half_.begin(), half_.end()), half_.end());
}

PointSet PointSet::primal_range(double h, int first, int last) {
    std::vector<int> half;
    for (int i = first; i <= last; ++i) half.push_back(2 * i);
    return PointSet(h, std::move(half));
}

bool PointSet::contains(int half_unit) const {
    return std::binary_search(half_.begin(), half_.end(), half_unit);
}

std::vector<double> PointSet::coordinates() const {
    std::vector<double> out;
    out.reserve(half_.size());
    for (int k : half_) out.push_back(k * 0.5 * h_);
    return out;
}

PointSet PointSet::shifted(int direction) const {
    std::vector<int> out(half_);
    for (int& k : out) k += direction;
    return PointSet(h_, std::move(out));
}

PointSet PointSet::star() const { return set_union(shifted(+1), shifted(-1)); }

PointSet PointSet::prime() const { return set_intersection(shifted(+1), shifted(-1)); }

PointSet set_union(const PointSet& a, const PointSet& b) {
    std::vector<int> out;
    std::set_union(a.half_.begin(), a.half_.end(), b.half_.begin(), b.half_.end(), std::back_inserter(out));
    return PointSet(a.h_, std::move(out));
}

PointSet set_intersection(const PointSet& a, const PointSet& b) {
    std::vector<int> out;
    std::set_intersection(a.half_.begin(), a.half_.end(), b.half_.begin(), b.half_.end(),
                          std::back_inserter(out));
    return PointSet(a.h_, std::move(out));
}

PointSet set_difference(const PointSet& a, const PointSet& b) {
    std::vector<int> out;
    std::set_difference(a.half_.begin(), a.half_.end(), b.half_.begin(), b.half_.end(),
                        std::back_inserter(out));
    return PointSet(a.h_, std::move(out));
}

int outward_normal(const PointSet& set, int half_unit) {
    const PointSet star = set.star();
    const bool left = star.contains(half_unit - 1);
    const bool right = star.contains(half_unit + 1);
    if (left && !right) return 1;
    if (!left && right) return -1;
    return 0;
}

double BoundarySample::trace_of(std::span<const double> star_values) const {
    // star index j sits at half-unit 2j + 1
    if (normal == 1) return star_values[static_cast<std::size_t>((half_unit - 2) / 2)];
    if (normal == -1) return star_values[static_cast<std::size_t>(half_unit / 2)];
    return 0.0;
}

Mesh Mesh::build(int interior_count) {
    if (interior_count < 2) {
        throw InvalidArgument("mesh needs at least 2 interior points, got N=" + std::to_string(interior_count));
    }
    return Mesh(interior_count, 1.0 / (interior_count + 1));
}

PointSet Mesh::interior() const { return PointSet::primal_range(h_, 1, n_); }

PointSet Mesh::closure() const { return PointSet::primal_range(h_, 0, n_ + 1); }

PointSet Mesh::boundary() const { return set_difference(interior().bar(), interior()); }

DualMesh Mesh::dual() const {
    const PointSet m = interior();
    return DualMesh{m.star(), m.prime()};
}

std::array<BoundarySample, 2> Mesh::boundary_samples() const {
    const PointSet m = interior();
    const PointSet b = boundary();
    std::array<BoundarySample, 2> out{};
    for (std::size_t k = 0; k < 2; ++k) {
        const int half = b.half_units()[k];
        out[k] = BoundarySample{half, half * 0.5 * h_, outward_normal(m, half)};
    }
    return out;
}

bool Mesh::is_regular() const {
    const PointSet m = interior();
    return m.bar().ring() == m;
}

double integrate(const PointSet& part, std::span<const double> values) {
    if (values.size() != part.size()) {
        throw InvalidArgument("integrate: " + std::to_string(values.size()) + " values for " +
                              std::to_string(part.size()) + " points");
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    return part.spacing() * sum;
}

double integrate_boundary(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
}

}  // namespace stocnull

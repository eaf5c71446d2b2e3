#include "stocnull/discrete_calc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "stocnull/errors.hpp"

namespace stocnull {

GridFunction::GridFunction(const Mesh& mesh, std::vector<double> values) : mesh_(mesh), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(mesh.interior_count() + 2)) {
        throw InvalidArgument("GridFunction needs N + 2 = " + std::to_string(mesh.interior_count() + 2) +
                              " values, got " + std::to_string(values_.size()));
    }
}

GridFunction GridFunction::from_function(const Mesh& mesh, const std::function<double(double)>& f) {
    GridFunction out(mesh);
    for (int i = 0; i <= mesh.interior_count() + 1; ++i) out[i] = f(mesh.point(i));
    return out;
}

GridFunction GridFunction::from_interior(const Mesh& mesh, std::span<const double> interior) {
    if (interior.size() != static_cast<std::size_t>(mesh.interior_count())) {
        throw InvalidArgument("from_interior: expected " + std::to_string(mesh.interior_count()) + " values");
    }
    GridFunction out(mesh);
    std::copy(interior.begin(), interior.end(), out.interior().begin());
    return out;
}

DualGridFunction::DualGridFunction(const Mesh& mesh, std::vector<double> values)
    : mesh_(mesh), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(mesh.interior_count() + 1)) {
        throw InvalidArgument("DualGridFunction needs N + 1 = " + std::to_string(mesh.interior_count() + 1) +
                              " values, got " + std::to_string(values_.size()));
    }
}

DualGridFunction DualGridFunction::from_function(const Mesh& mesh, const std::function<double(double)>& f) {
    DualGridFunction out(mesh);
    for (int j = 0; j <= mesh.interior_count(); ++j) out[j] = f(mesh.dual_point(j));
    return out;
}

DualGridFunction apply_Dh(const GridFunction& u) {
    const Mesh& m = u.mesh();
    DualGridFunction out(m);
    const double inv_h = 1.0 / m.spacing();
    for (int j = 0; j <= m.interior_count(); ++j) out[j] = (u[j + 1] - u[j]) * inv_h;
    return out;
}

DualGridFunction apply_Ah(const GridFunction& u) {
    const Mesh& m = u.mesh();
    DualGridFunction out(m);
    for (int j = 0; j <= m.interior_count(); ++j) out[j] = 0.5 * (u[j + 1] + u[j]);
    return out;
}

GridFunction apply_Dh(const DualGridFunction& v) {
    const Mesh& m = v.mesh();
    GridFunction out(m);
    const double inv_h = 1.0 / m.spacing();
    for (int i = 1; i <= m.interior_count(); ++i) out[i] = (v[i] - v[i - 1]) * inv_h;
    return out;
}

GridFunction apply_Ah(const DualGridFunction& v) {
    const Mesh& m = v.mesh();
    GridFunction out(m);
    for (int i = 1; i <= m.interior_count(); ++i) out[i] = 0.5 * (v[i] + v[i - 1]);
    return out;
}

GridFunction apply_Dh2(const GridFunction& u) {
    const Mesh& m = u.mesh();
    GridFunction out(m);
    const double inv_h2 = 1.0 / (m.spacing() * m.spacing());
    for (int i = 1; i <= m.interior_count(); ++i) out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
    return out;
}

double integrate_interior(const GridFunction& u) { return integrate(u.mesh().interior(), u.interior()); }

double integrate_star(const DualGridFunction& v) { return integrate(v.mesh().dual().star, v.values()); }

double LeibnizResiduals::max() const noexcept {
    return std::max({difference_of_product, average_of_product, average_inversion});
}

LeibnizResiduals leibniz_residuals(const GridFunction& u, const GridFunction& v) {
    const Mesh& m = u.mesh();
    const double h = m.spacing();
    const int n = m.interior_count();

    GridFunction uv(m);
    for (int i = 0; i <= n + 1; ++i) uv[i] = u[i] * v[i];

    const DualGridFunction du = apply_Dh(u), dv = apply_Dh(v), au = apply_Ah(u), av = apply_Ah(v);
    const DualGridFunction duv = apply_Dh(uv), auv = apply_Ah(uv);

    LeibnizResiduals r;
    for (int j = 0; j <= n; ++j) {
        r.difference_of_product = std::max(r.difference_of_product, std::abs(duv[j] - (du[j] * av[j] + au[j] * dv[j])));
        r.average_of_product =
            std::max(r.average_of_product, std::abs(auv[j] - (au[j] * av[j] + 0.25 * h * h * du[j] * dv[j])));
    }
    const GridFunction aau = apply_Ah(au);
    const GridFunction d2u = apply_Dh2(u);
    for (int i = 1; i <= n; ++i) {
        r.average_inversion = std::max(r.average_inversion, std::abs(u[i] - (aau[i] - 0.25 * h * h * d2u[i])));
    }
    return r;
}

double IbpResiduals::max() const noexcept { return std::max(difference, average); }

IbpResiduals ibp_residuals(const GridFunction& u, const DualGridFunction& v) {
    const Mesh& m = u.mesh();
    const double h = m.spacing();
    const GridFunction dv = apply_Dh(v);
    const GridFunction av = apply_Ah(v);
    const DualGridFunction du = apply_Dh(u);
    const DualGridFunction au = apply_Ah(u);

    double lhs_d = 0.0, lhs_a = 0.0;
    for (int i = 1; i <= m.interior_count(); ++i) {
        lhs_d += u[i] * dv[i];
        lhs_a += u[i] * av[i];
    }
    lhs_d *= h;
    lhs_a *= h;

    double star_d = 0.0, star_a = 0.0;
    for (int j = 0; j <= m.interior_count(); ++j) {
        star_d += du[j] * v[j];
        star_a += au[j] * v[j];
    }
    star_d *= h;
    star_a *= h;

    double boundary_d = 0.0, boundary_a = 0.0;
    for (const BoundarySample& b : m.boundary_samples()) {
        const double ub = u[b.half_unit / 2];
        const double tr = b.trace_of(v.values());
        boundary_d += ub * tr * b.normal;
        boundary_a += ub * tr;
    }

    IbpResiduals r;
    r.difference = std::abs(lhs_d - (-star_d + boundary_d));
    r.average = std::abs(lhs_a - (star_a - 0.5 * h * boundary_a));
    return r;
}

ImplicitDriftOperator::ImplicitDriftOperator(const Mesh& mesh, double dt, std::span<const double> a1) {
    reset(mesh, dt, a1);
}

void ImplicitDriftOperator::reset(const Mesh& mesh, double dt, std::span<const double> a1) {
    const auto n = static_cast<std::size_t>(mesh.interior_count());
    if (a1.size() != n) {
        throw InvalidArgument("ImplicitDriftOperator: a1 has " + std::to_string(a1.size()) + " entries, expected " +
                              std::to_string(n));
    }
    if (!(dt >= 0.0)) throw InvalidArgument("ImplicitDriftOperator: dt must be nonnegative");
    dt_ = dt;
    h_ = mesh.spacing();
    const double coupling = dt / (h_ * h_);
    diag_.resize(n);
    lower_.resize(n);
    upper_.resize(n);
    a1_bound_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diag_[i] = 1.0 + 2.0 * coupling - dt * a1[i];
        lower_[i] = i > 0 ? -coupling : 0.0;
        upper_[i] = i + 1 < n ? -coupling : 0.0;
        a1_bound_ = std::max(a1_bound_, std::abs(a1[i]));
    }
    factorize();
}

void ImplicitDriftOperator::factorize() {
    const std::size_t n = diag_.size();
    l_factor_.resize(n);
    u_diag_.resize(n);
    const double scale = 1.0 + 2.0 * dt_ / (h_ * h_);
    for (std::size_t i = 0; i < n; ++i) {
        double pivot = diag_[i];
        if (i > 0) {
            l_factor_[i] = lower_[i] / u_diag_[i - 1];
            pivot -= l_factor_[i] * upper_[i - 1];
        } else {
            l_factor_[i] = 0.0;
        }
        if (!(std::abs(pivot) > 1e-14 * scale)) {
            std::ostringstream msg;
            msg << "singular drift-implicit system at row " << i << " (dt=" << dt_ << ", h=" << h_
                << ", max|a1|=" << a1_bound_ << ")";
            throw SingularSystem(msg.str(), dt_, h_, a1_bound_);
        }
        u_diag_[i] = pivot;
    }
}

void ImplicitDriftOperator::apply(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = diag_.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = diag_[i] * x[i];
        if (i > 0) acc += lower_[i] * x[i - 1];
        if (i + 1 < n) acc += upper_[i] * x[i + 1];
        out[i] = acc;
    }
}

void ImplicitDriftOperator::solve(std::span<const double> rhs, std::span<double> out) const {
    // L y = rhs, then U x = y
    const std::size_t n = diag_.size();
    if (n == 0) return;
    out[0] = rhs[0];
    for (std::size_t i = 1; i < n; ++i) out[i] = rhs[i] - l_factor_[i] * out[i - 1];
    out[n - 1] /= u_diag_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = (out[i] - upper_[i] * out[i + 1]) / u_diag_[i];
}

void ImplicitDriftOperator::solve_transposed(std::span<const double> rhs, std::span<double> out) const {
    // M^T = U^T L^T: U^T y = rhs (forward), then L^T x = y (backward)
    const std::size_t n = diag_.size();
    if (n == 0) return;
    out[0] = rhs[0] / u_diag_[0];
    for (std::size_t i = 1; i < n; ++i) out[i] = (rhs[i] - upper_[i - 1] * out[i - 1]) / u_diag_[i];
    for (std::size_t i = n - 1; i-- > 0;) out[i] -= l_factor_[i + 1] * out[i + 1];
}

GridFunction solve_drift_implicit(const Mesh& mesh, double dt, const GridFunction& a1, const GridFunction& rhs) {
    const ImplicitDriftOperator op(mesh, dt, a1.interior());
    GridFunction out(mesh);
    op.solve(rhs.interior(), out.interior());
    return out;
}

GridFunction solve_drift_implicit_transposed(const Mesh& mesh, double dt, const GridFunction& a1,
                                             const GridFunction& rhs) {
    const ImplicitDriftOperator op(mesh, dt, a1.interior());
    GridFunction out(mesh);
    op.solve_transposed(rhs.interior(), out.interior());
    return out;
}

double stencil_value(const std::function<double(double)>& f, int m, int n, double h, double x) {
    if (m < 0 || n < 0) throw InvalidArgument("stencil_value: operator powers must be nonnegative");
    if (n > 0) return (stencil_value(f, m, n - 1, h, x + 0.5 * h) - stencil_value(f, m, n - 1, h, x - 0.5 * h)) / h;
    if (m > 0) return 0.5 * (stencil_value(f, m - 1, 0, h, x + 0.5 * h) + stencil_value(f, m - 1, 0, h, x - 0.5 * h));
    return f(x);
}

ConsistencyProbe consistency_probe(const std::function<double(double)>& f,
                                   const std::function<double(double)>& derivative, int m, int n, double h0,
                                   int halvings, double lo, double hi) {
    if (!(h0 > 0.0) || halvings < 1 || !(lo < hi)) throw InvalidArgument("consistency_probe: bad window or spacing");
    ConsistencyProbe probe;
    probe.m = m;
    probe.n = n;
    const double shift = (m + n) % 2 == 0 ? 0.0 : 0.5;
    for (int level = 0; level <= halvings; ++level) {
        const double h = std::ldexp(h0, -level);
        double err = 0.0;
        const auto first = static_cast<long>(std::ceil(lo / h - shift - 1e-9));
        const auto last = static_cast<long>(std::floor(hi / h - shift + 1e-9));
        for (long i = first; i <= last; ++i) {
            const double x = (static_cast<double>(i) + shift) * h;
            err = std::max(err, std::abs(stencil_value(f, m, n, h, x) - derivative(x)));
        }
        probe.h.push_back(h);
        probe.error.push_back(err);
    }
    for (std::size_t k = 0; k + 1 < probe.error.size(); ++k) {
        probe.order.push_back(std::log2(probe.error[k] / probe.error[k + 1]));
    }
    return probe;
}

}  // namespace stocnull

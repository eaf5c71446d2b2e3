#pragma once

#include <functional>
#include <span>
#include <vector>

#include "stocnull/mesh.hpp"

namespace stocnull {

// Values on the closure points x_0 .. x_{N+1}; length N + 2.
class GridFunction {
public:
    explicit GridFunction(const Mesh& mesh) : mesh_(mesh), values_(mesh.interior_count() + 2, 0.0) {}
    GridFunction(const Mesh& mesh, std::vector<double> values);

    static GridFunction from_function(const Mesh& mesh, const std::function<double(double)>& f);
    // Interior values given, boundary entries set to zero.
    static GridFunction from_interior(const Mesh& mesh, std::span<const double> interior);

    const Mesh& mesh() const noexcept { return mesh_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> interior() const noexcept {
        return std::span<const double>(values_).subspan(1, mesh_.interior_count());
    }
    std::span<double> interior() noexcept { return std::span<double>(values_).subspan(1, mesh_.interior_count()); }

    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }

private:
    Mesh mesh_;
    std::vector<double> values_;
};

// Values on the star half-points x_{1/2} .. x_{N+1/2}; length N + 1.
class DualGridFunction {
public:
    explicit DualGridFunction(const Mesh& mesh) : mesh_(mesh), values_(mesh.interior_count() + 1, 0.0) {}
    DualGridFunction(const Mesh& mesh, std::vector<double> values);

    static DualGridFunction from_function(const Mesh& mesh, const std::function<double(double)>& f);

    const Mesh& mesh() const noexcept { return mesh_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](int j) const { return values_[static_cast<std::size_t>(j)]; }
    double& operator[](int j) { return values_[static_cast<std::size_t>(j)]; }

private:
    Mesh mesh_;
    std::vector<double> values_;
};

// Closure -> star.
DualGridFunction apply_Dh(const GridFunction& u);
DualGridFunction apply_Ah(const GridFunction& u);
// Star -> interior (boundary entries of the result are zero).
GridFunction apply_Dh(const DualGridFunction& v);
GridFunction apply_Ah(const DualGridFunction& v);
// Three-point second difference on the interior; boundary entries zero.
GridFunction apply_Dh2(const GridFunction& u);

// h * sum over interior points / over star points.
double integrate_interior(const GridFunction& u);
double integrate_star(const DualGridFunction& v);

// Max-abs residuals of the product rules on the star mesh and of the
// average/second-difference inversion on the interior.
struct LeibnizResiduals {
    double difference_of_product = 0.0;  // D(uv) = Du Av + Au Dv
    double average_of_product = 0.0;     // A(uv) = Au Av + h^2/4 Du Dv
    double average_inversion = 0.0;      // u = A^2 u - h^2/4 D^2 u

    double max() const noexcept;
};
LeibnizResiduals leibniz_residuals(const GridFunction& u, const GridFunction& v);

// Residuals of the summation-by-parts formulas for D_h and A_h, boundary
// terms included.
struct IbpResiduals {
    double difference = 0.0;
    double average = 0.0;

    double max() const noexcept;
};
IbpResiduals ibp_residuals(const GridFunction& u, const DualGridFunction& v);

// (A_h^m D_h^n f)(x) for f defined on the whole line, applied pointwise.
double stencil_value(const std::function<double(double)>& f, int m, int n, double h, double x);

/**
 * Observed convergence order of A_h^m D_h^n f against f^(n) on mesh points of
 * [lo, hi] (primal points when m + n is even, half points otherwise). The
 * spacing starts at h0 and is halved `halvings` times; one order per halving.
 */
struct ConsistencyProbe {
    int m = 0;
    int n = 0;
    std::vector<double> h;
    std::vector<double> error;  // max |A^m D^n f - f^(n)| over the window
    std::vector<double> order;  // log2(error[k] / error[k + 1])
};
ConsistencyProbe consistency_probe(const std::function<double(double)>& f,
                                   const std::function<double(double)>& derivative, int m, int n, double h0,
                                   int halvings, double lo, double hi);

/**
 * M = I - dt (D_h^2 + diag(a1)) on the interior with homogeneous Dirichlet
 * elimination. Factorized once per (dt, a1); solves reuse the factors.
 * Thomas elimination without pivoting.
 */
class ImplicitDriftOperator {
public:
    ImplicitDriftOperator() = default;
    ImplicitDriftOperator(const Mesh& mesh, double dt, std::span<const double> a1);

    // Refactorize in place, reusing storage.
    void reset(const Mesh& mesh, double dt, std::span<const double> a1);

    int size() const noexcept { return static_cast<int>(diag_.size()); }

    void apply(std::span<const double> x, std::span<double> out) const;
    void solve(std::span<const double> rhs, std::span<double> out) const;
    void solve_transposed(std::span<const double> rhs, std::span<double> out) const;

private:
    void factorize();

    double dt_ = 0.0;
    double h_ = 0.0;
    double a1_bound_ = 0.0;
    std::vector<double> diag_;
    std::vector<double> lower_;  // lower_[i] couples row i to i - 1
    std::vector<double> upper_;  // upper_[i] couples row i to i + 1
    // LU factors: M = L U, L unit lower bidiagonal, U upper bidiagonal with upper_.
    std::vector<double> l_factor_;
    std::vector<double> u_diag_;
};

GridFunction solve_drift_implicit(const Mesh& mesh, double dt, const GridFunction& a1, const GridFunction& rhs);
GridFunction solve_drift_implicit_transposed(const Mesh& mesh, double dt, const GridFunction& a1,
                                             const GridFunction& rhs);

}  // namespace stocnull

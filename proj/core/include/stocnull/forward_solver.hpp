#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stocnull/discrete_calc.hpp"
#include "stocnull/mesh.hpp"
#include "stocnull/noise_tree.hpp"

namespace stocnull {

enum class CoefficientKind { zero, constant, sinusoid, adapted_random };

std::string to_string(CoefficientKind kind);
CoefficientKind coefficient_kind_from_string(const std::string& name);

/**
 * Potentials a1 (drift) and a2 (diffusion) sampled on the interior at the left
 * endpoint of every time step. Deterministic kinds store one grid function per
 * level; adapted kinds store one per tree node.
 */
class Coefficients {
public:
    static Coefficients zero(const ScenarioTree& tree, const Mesh& mesh);
    static Coefficients constant(const ScenarioTree& tree, const Mesh& mesh, double a1, double a2);
    // a1 sin(2 pi x), a2 cos(2 pi x).
    static Coefficients sinusoid(const ScenarioTree& tree, const Mesh& mesh, double a1, double a2);
    // Independent uniform values in [-a1, a1] and [-a2, a2] at every node and point.
    static Coefficients adapted_random(const ScenarioTree& tree, const Mesh& mesh, double a1, double a2,
                                       std::uint64_t seed);
    static Coefficients make(CoefficientKind kind, const ScenarioTree& tree, const Mesh& mesh, double a1, double a2,
                             std::uint64_t seed);
    // General adapted coefficients; both fields must be per_step shaped.
    static Coefficients from_fields(AdaptedField a1, AdaptedField a2);

    std::span<const double> a1(int level, std::size_t node) const noexcept;
    std::span<const double> a2(int level, std::size_t node) const noexcept;

    double a1_sup() const noexcept { return a1_sup_; }
    double a2_sup() const noexcept { return a2_sup_; }
    // A = |a1|_inf + |a2|_inf
    double sup_norm() const noexcept { return a1_sup_ + a2_sup_; }
    bool adapted() const noexcept { return adapted_; }

private:
    Coefficients() = default;
    void finish();

    bool adapted_ = false;
    int width_ = 0;
    int levels_ = 0;
    // adapted_: AdaptedField layout; otherwise levels_ x width_.
    std::vector<double> a1_;
    std::vector<double> a2_;
    double a1_sup_ = 0.0;
    double a2_sup_ = 0.0;
};

// Control region omega intersected with the interior mesh, as an indicator.
class Region {
public:
    static Region from_interval(const Mesh& mesh, const Interval& omega);
    static Region everywhere(const Mesh& mesh);

    const Interval& interval() const noexcept { return interval_; }
    int width() const noexcept { return static_cast<int>(indicator_.size()); }
    // Interior index i in 1..N.
    bool contains(int i) const noexcept { return indicator_[static_cast<std::size_t>(i - 1)] != 0; }
    // chi_omega as 0/1 over interior points (0-based).
    std::span<const double> indicator() const noexcept { return indicator_; }
    int count() const noexcept;

private:
    Interval interval_;
    std::vector<double> indicator_;
};

/**
 * Control pair: u acts in the drift through chi_omega, v acts in the
 * diffusion on the whole interior. Both are per-step adapted fields.
 */
struct ControlPair {
    AdaptedField u;
    AdaptedField v;
    Region region;

    static ControlPair zero(const ScenarioTree& tree, const Mesh& mesh, const Region& region);
    // Copies u with entries outside the region set to zero.
    static ControlPair localized(AdaptedField u, AdaptedField v, const Region& region);
};

// Throws InvalidArgument unless dt |a1|_inf < 1.
void check_dominance(const Coefficients& coeffs, const ScenarioTree& tree);

/**
 * One drift-implicit Euler-Maruyama step:
 *   (I - dt (D_h^2 + a1)) y_{k+1} = y_k + dt chi u_k + (a2 y_k + v_k) dB.
 */
GridFunction forward_step(const GridFunction& y_k, const GridFunction& u_k, const GridFunction& v_k,
                          std::span<const double> a1, std::span<const double> a2, const Region& region, double dt,
                          double dB);

struct ForwardSolution {
    AdaptedField state;  // levels 0 .. depth

    LevelField terminal() const { return state.level_field(state.level_count() - 1); }
};

// Null control pointers mean zero controls.
ForwardSolution solve_forward(const GridFunction& y0, const AdaptedField* drift_control,
                              const AdaptedField* diffusion_control, const Region& region,
                              const Coefficients& coeffs, const ScenarioTree& tree, const Mesh& mesh);

ForwardSolution solve_forward(const GridFunction& y0, const ControlPair& controls, const Coefficients& coeffs,
                              const ScenarioTree& tree, const Mesh& mesh);

// Forward solve without controls.
ForwardSolution solve_free(const GridFunction& y0, const Coefficients& coeffs, const ScenarioTree& tree,
                           const Mesh& mesh);

}  // namespace stocnull

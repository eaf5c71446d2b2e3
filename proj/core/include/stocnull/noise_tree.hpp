#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace stocnull {

/**
 * Binary scenario tree of depth m on [0, T]. Level k holds 2^k equally likely
 * nodes; child(n, b) = 2n + b, and the edge into a child with b = 1 carries
 * Brownian increment +sqrt(dt), b = 0 carries -sqrt(dt). The level-k node
 * algebra plays the role of F_{t_k}.
 */
class ScenarioTree {
public:
    static constexpr int kDefaultMaxDepth = 16;

    // Throws InvalidArgument for depth < 1 or T <= 0, ResourceLimit above max_depth.
    static ScenarioTree build(int depth, double T, int max_depth = kDefaultMaxDepth);

    int depth() const noexcept { return depth_; }
    double horizon() const noexcept { return T_; }
    double dt() const noexcept { return dt_; }
    double sqrt_dt() const noexcept { return sqrt_dt_; }
    double time(int level) const noexcept { return level * dt_; }

    static std::size_t node_count(int level) noexcept { return std::size_t{1} << level; }
    static double probability(int level) noexcept;
    static std::size_t child(std::size_t node, int branch) noexcept { return 2 * node + static_cast<std::size_t>(branch); }
    static std::size_t parent(std::size_t node) noexcept { return node / 2; }
    // Level offset in level-major flat storage.
    static std::size_t offset(int level) noexcept { return (std::size_t{1} << level) - 1; }

    // Increment on the edge into a child with the given branch bit.
    double increment(int branch) const noexcept { return branch ? sqrt_dt_ : -sqrt_dt_; }
    // Increment on the edge into `node` at `level` >= 1.
    double increment_into(std::size_t node) const noexcept { return increment(static_cast<int>(node & 1U)); }

    std::size_t total_nodes() const noexcept { return offset(depth_ + 1); }

private:
    ScenarioTree(int depth, double T);

    int depth_ = 0;
    double T_ = 0.0;
    double dt_ = 0.0;
    double sqrt_dt_ = 0.0;
};

// Exact expectation of a level-k node function: 2^{-k} sum_n phi(n).
double expectation(const ScenarioTree& tree, int level, std::span<const double> node_values);

// z_child = conditional_mean + integrand * dB for both children.
struct MartingaleSplit {
    double conditional_mean = 0.0;
    double integrand = 0.0;
};
MartingaleSplit martingale_coeff(double z_plus, double z_minus, double dt);
// Componentwise version for grid values.
void martingale_coeff(std::span<const double> z_plus, std::span<const double> z_minus, double dt,
                      std::span<double> conditional_mean, std::span<double> integrand);

// A grid function (interior values, `width` entries) at every node of one level.
class LevelField {
public:
    LevelField() = default;
    LevelField(int level, int width) : level_(level), width_(width), data_(ScenarioTree::node_count(level) * width) {}

    int level() const noexcept { return level_; }
    int width() const noexcept { return width_; }
    std::size_t nodes() const noexcept { return ScenarioTree::node_count(level_); }

    std::span<double> node(std::size_t n) noexcept { return {data_.data() + n * width_, static_cast<std::size_t>(width_)}; }
    std::span<const double> node(std::size_t n) const noexcept {
        return {data_.data() + n * width_, static_cast<std::size_t>(width_)};
    }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

private:
    int level_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/**
 * Tree-indexed grid functions over levels [0, level_count). Level-k values are
 * attached to level-k nodes only, so adaptedness holds by construction.
 * A full state field has level_count = depth + 1 and stores
 * width * (2^{depth+1} - 1) values.
 */
class AdaptedField {
public:
    AdaptedField() = default;
    AdaptedField(const ScenarioTree& tree, int width, int level_count);
    // Full state field: levels 0 .. depth.
    static AdaptedField state(const ScenarioTree& tree, int width) { return AdaptedField(tree, width, tree.depth() + 1); }
    // Per-interval field (controls, coefficients, sources): levels 0 .. depth - 1.
    static AdaptedField per_step(const ScenarioTree& tree, int width) { return AdaptedField(tree, width, tree.depth()); }

    int width() const noexcept { return width_; }
    int level_count() const noexcept { return level_count_; }
    std::size_t value_count() const noexcept { return data_.size(); }

    std::span<double> node(int level, std::size_t n) noexcept {
        return {data_.data() + (ScenarioTree::offset(level) + n) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<const double> node(int level, std::size_t n) const noexcept {
        return {data_.data() + (ScenarioTree::offset(level) + n) * width_, static_cast<std::size_t>(width_)};
    }
    // All values of one level, node-major.
    std::span<double> level(int k) noexcept {
        return {data_.data() + ScenarioTree::offset(k) * width_, ScenarioTree::node_count(k) * width_};
    }
    std::span<const double> level(int k) const noexcept {
        return {data_.data() + ScenarioTree::offset(k) * width_, ScenarioTree::node_count(k) * width_};
    }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    LevelField level_field(int k) const;
    void set_level(const LevelField& field);

private:
    int width_ = 0;
    int level_count_ = 0;
    std::vector<double> data_;
};

// E <a, b>_M = sum_n 2^{-k} h sum_i a_n(i) b_n(i), in fixed node order.
double tree_inner(std::span<const double> a, std::span<const double> b, int level, double h);
double tree_inner(const LevelField& a, const LevelField& b, double h);
// E <a_k, b_k>_M for one level of two adapted fields.
double tree_inner(const AdaptedField& a, const AdaptedField& b, int level, double h);

// Seeded Gaussian fields, generated node by node in index order.
LevelField random_level_field(int level, int width, std::mt19937_64& rng, double scale = 1.0);
AdaptedField random_adapted_field(const ScenarioTree& tree, int width, int level_count, std::mt19937_64& rng,
                                  double scale = 1.0);

// Stream seeds derived from a root seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept;

}  // namespace stocnull

#include "stocnull/noise_tree.hpp"

#include <cmath>
#include <string>

#include "stocnull/errors.hpp"

namespace stocnull {

ScenarioTree::ScenarioTree(int depth, double T)
    : depth_(depth), T_(T), dt_(T / depth), sqrt_dt_(std::sqrt(T / depth)) {}

ScenarioTree ScenarioTree::build(int depth, double T, int max_depth) {
    if (depth < 1) throw InvalidArgument("tree depth must be at least 1, got " + std::to_string(depth));
    if (!(T > 0.0)) throw InvalidArgument("tree horizon T must be positive");
    if (depth > max_depth) {
        throw ResourceLimit("tree depth " + std::to_string(depth) + " exceeds the cap " + std::to_string(max_depth) +
                            " (storage grows as 2^depth)");
    }
    return ScenarioTree(depth, T);
}

double ScenarioTree::probability(int level) noexcept { return std::ldexp(1.0, -level); }

double expectation(const ScenarioTree& tree, int level, std::span<const double> node_values) {
    if (level < 0 || level > tree.depth() || node_values.size() != ScenarioTree::node_count(level)) {
        throw InvalidArgument("expectation: expected one value per level-" + std::to_string(level) + " node");
    }
    double sum = 0.0;
    for (double v : node_values) sum += v;
    return sum * ScenarioTree::probability(level);
}

MartingaleSplit martingale_coeff(double z_plus, double z_minus, double dt) {
    return MartingaleSplit{0.5 * (z_plus + z_minus), (z_plus - z_minus) / (2.0 * std::sqrt(dt))};
}

void martingale_coeff(std::span<const double> z_plus, std::span<const double> z_minus, double dt,
                      std::span<double> conditional_mean, std::span<double> integrand) {
    const double inv = 1.0 / (2.0 * std::sqrt(dt));
    for (std::size_t i = 0; i < z_plus.size(); ++i) {
        conditional_mean[i] = 0.5 * (z_plus[i] + z_minus[i]);
        integrand[i] = (z_plus[i] - z_minus[i]) * inv;
    }
}

AdaptedField::AdaptedField(const ScenarioTree& tree, int width, int level_count)
    : width_(width), level_count_(level_count) {
    if (level_count < 1 || level_count > tree.depth() + 1) {
        throw InvalidArgument("AdaptedField: level_count must lie in [1, depth + 1]");
    }
    data_.assign(ScenarioTree::offset(level_count) * static_cast<std::size_t>(width), 0.0);
}

LevelField AdaptedField::level_field(int k) const {
    LevelField out(k, width_);
    const auto src = level(k);
    std::copy(src.begin(), src.end(), out.data().begin());
    return out;
}

void AdaptedField::set_level(const LevelField& field) {
    if (field.width() != width_ || field.level() >= level_count_) {
        throw InvalidArgument("AdaptedField::set_level: shape mismatch");
    }
    const auto src = field.data();
    std::copy(src.begin(), src.end(), level(field.level()).begin());
}

double tree_inner(std::span<const double> a, std::span<const double> b, int level, double h) {
    if (a.size() != b.size()) throw InvalidArgument("tree_inner: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum * h * ScenarioTree::probability(level);
}

double tree_inner(const LevelField& a, const LevelField& b, double h) {
    if (a.level() != b.level()) throw InvalidArgument("tree_inner: level mismatch");
    return tree_inner(a.data(), b.data(), a.level(), h);
}

double tree_inner(const AdaptedField& a, const AdaptedField& b, int level, double h) {
    return tree_inner(a.level(level), b.level(level), level, h);
}

LevelField random_level_field(int level, int width, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> gauss(0.0, scale);
    LevelField out(level, width);
    for (double& v : out.data()) v = gauss(rng);
    return out;
}

AdaptedField random_adapted_field(const ScenarioTree& tree, int width, int level_count, std::mt19937_64& rng,
                                  double scale) {
    std::normal_distribution<double> gauss(0.0, scale);
    AdaptedField out(tree, width, level_count);
    for (double& v : out.data()) v = gauss(rng);
    return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace stocnull

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stocnull {

// Precondition violations on user-facing arguments.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A tridiagonal elimination met a (near) zero pivot.
class SingularSystem : public std::runtime_error {
public:
    SingularSystem(const std::string& what, double dt, double h, double a1_bound)
        : std::runtime_error(what), dt_(dt), h_(h), a1_bound_(a1_bound) {}

    double dt() const noexcept { return dt_; }
    double h() const noexcept { return h_; }
    double a1_bound() const noexcept { return a1_bound_; }

private:
    double dt_;
    double h_;
    double a1_bound_;
};

// Requested tree exceeds the configured depth cap.
class ResourceLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One of the weight-function admissibility conditions failed.
class InvalidWeightConfiguration : public std::invalid_argument {
public:
    InvalidWeightConfiguration(std::string condition, const std::string& detail)
        : std::invalid_argument("invalid weight configuration: " + condition + " (" + detail + ")"),
          condition_(std::move(condition)) {}

    const std::string& condition() const noexcept { return condition_; }

private:
    std::string condition_;
};

// CG did not reach its tolerance; carries the relative residual history.
class ConvergenceFailure : public std::runtime_error {
public:
    ConvergenceFailure(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

// Experiment configuration rejected; one message per violated constraint.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid configuration";
        for (const auto& item : items) {
            out += "\n  ";
            out += item;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

// Output could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stocnull

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace milne {

/// Thrown when a caller breaks an operation's precondition.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Grid too small or otherwise unusable for the requested operation.
class UnsupportedGrid : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

/// An iterative solver ran out of iterations before meeting its tolerance.
class IterationFailure : public std::runtime_error {
public:
    IterationFailure(const std::string& what, double last_residual, std::size_t iterations)
        : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          last_residual_(last_residual),
          iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    std::size_t iterations_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

}  // namespace milne

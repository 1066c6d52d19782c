#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlsrk {

/// Non-finite value produced while evaluating model coefficients or a step.
class NumericalDomainError : public std::runtime_error {
public:
    NumericalDomainError(const std::string& what, std::size_t index)
        : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
    /// Offending component or stage index.
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Operation requested for a state dimension it does not support.
class UnsupportedDimension : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every particle weight vanished at some assimilation step.
class FilterCollapse : public std::runtime_error {
public:
    explicit FilterCollapse(std::size_t step)
        : std::runtime_error("particle filter collapsed at observation " + std::to_string(step)),
          step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

}  // namespace mlsrk

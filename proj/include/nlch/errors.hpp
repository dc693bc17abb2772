#pragma once

#include <stdexcept>
#include <string>

namespace nlch {

/// An iterative solve stopped short of its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

} // namespace nlch

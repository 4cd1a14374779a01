#ifndef BLOWFLY_ERRORS_HPP
#define BLOWFLY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace blowfly {

// Parameter set outside the regimes this code handles.
struct RegimeError : std::runtime_error {
    explicit RegimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Root finder / quadrature failed to converge.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreconditionError : std::invalid_argument {
    explicit PreconditionError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solution left the trusted range (blow-up guard).
struct StabilityError : std::runtime_error {
    explicit StabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FitError : std::runtime_error {
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace blowfly

#endif

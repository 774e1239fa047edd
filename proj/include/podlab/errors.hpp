#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace podlab {

/// Network splits into disconnected parts (typically after a branch trip).
class IslandingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Admittance system could not be factorized; `bus` is the offending pivot.
class SingularNetworkError : public std::runtime_error {
public:
    SingularNetworkError(const std::string& msg, std::size_t bus)
        : std::runtime_error(msg), bus_(bus) {}
    std::size_t bus() const noexcept { return bus_; }

private:
    std::size_t bus_;
};

/// A device produced a non-finite derivative.
class NonFiniteDerivativeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, std::size_t step)
        : std::runtime_error(msg), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Operating point is not an equilibrium, or similar modelling precondition.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed case or scenario file. `where` carries a field path or line.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace podlab

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "podlab/grid/power_system.hpp"

namespace podlab::modal {

/// Single-input single-output linear model dx/dt = A x + b u, y = c x.
struct LinearModel {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::RowVectorXd c;
    std::vector<std::string> labels;

    Eigen::Index order() const { return a.rows(); }
    /// Throws std::invalid_argument on inconsistent dimensions.
    void validate() const;
};

using DynamicsFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double u)>;
using OutputFn = std::function<double(const Eigen::VectorXd& x)>;

struct LinearizeOptions {
    /// Relative perturbation; the step for state i is
    /// max(perturbation * max(|x_i|, 1), floor).
    double perturbation = 1e-6;
    double floor = 1e-8;
    /// Largest |dx/dt| accepted at the operating point.
    double equilibrium_tol = 1e-6;
};

/// Central finite-difference linearization about (x0, u = 0).
/// Throws ModelError if x0 is not an equilibrium.
LinearModel linearize(const DynamicsFn& f, const OutputFn& h, const Eigen::VectorXd& x0,
                      const LinearizeOptions& opt = {}, std::vector<std::string> labels = {});

/// Linearize a power system about its initial operating point, from the
/// modulation of TCSC `actuator` to `output`. `conditions` selects network
/// state (outages etc.) held during linearization.
LinearModel linearize(const grid::PowerSystem& ps, const grid::Channel& output, std::size_t actuator,
                      const LinearizeOptions& opt = {}, const grid::Conditions& conditions = {});

}  // namespace podlab::modal

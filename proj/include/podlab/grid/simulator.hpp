#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "podlab/grid/power_system.hpp"

namespace podlab::grid {

/// One explicit predictor-corrector (Heun) step with a single correction:
/// x_p = x + dt f(x);  x+ = x + dt/2 (f(x) + f(x_p)).
template <typename F>
Eigen::VectorXd step_modified_euler(F&& f, const Eigen::VectorXd& x, double dt) {
    const Eigen::VectorXd f0 = f(x);
    const Eigen::VectorXd xp = x + dt * f0;
    const Eigen::VectorXd f1 = f(xp);
    return x + 0.5 * dt * (f0 + f1);
}

struct SimulationOptions {
    double t_end = 20.0;
    double dt = 0.005;
    double controller_period = 0.02;
    bool record_states = true;
    bool record_voltages = false;
    /// |speed deviation| above this (p.u.) is reported as divergence.
    double max_speed_deviation = 1.0;
};

/// Called once per controller period with the measured value; returns the
/// modulation applied (zero-order hold) until the next call.
using ControllerHook = std::function<double(double t, double y)>;

struct SimulationWarning {
    std::size_t step = 0;
    std::string message;
};

/// Raw output at integrator resolution: sample k is the state at t[k]
/// together with the modulation held over [t[k], t[k+1]).
struct RawSeries {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> u;
    std::vector<std::vector<double>> speeds;  ///< [machine][sample]
    std::vector<Eigen::VectorXd> states;      ///< when record_states
    std::vector<CVector> voltages;            ///< when record_voltages
    std::vector<SimulationWarning> warnings;
    std::size_t controller_stride = 4;        ///< integrator steps per controller tick
};

/// Snap event times onto the integration grid; returns the snapped copy
/// and appends a warning for every event that moved.
std::vector<Event> snap_events(std::vector<Event> events, double dt,
                               std::vector<SimulationWarning>& warnings);

/// Advance the full model one Modified Euler step with the network re-solved
/// inside every derivative evaluation. Throws DivergenceError on non-finite state.
DynamicState step_system(const PowerSystem& ps, const DynamicState& state, const Inputs& u,
                         const Conditions& c, double dt, std::size_t step_index = 0,
                         const CMatrix* static_y = nullptr);

/// Fixed-step simulation. `hook` may be empty (no controller). Modulation is
/// applied to TCSC `actuator`. Throws DivergenceError on a non-finite state or
/// a speed deviation beyond opt.max_speed_deviation.
RawSeries run_simulation(const PowerSystem& ps, const std::vector<Event>& events,
                         const Channel& measurement, std::size_t actuator, const ControllerHook& hook,
                         const SimulationOptions& opt);

}  // namespace podlab::grid

#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "podlab/grid/simulator.hpp"
#include "podlab/pod/phasor.hpp"

namespace podlab::harness {

struct CostPerformance {
    double cost = 0.0;
    double performance = 0.0;
    /// Set when every speed deviation is zero; performance is then +inf.
    bool performance_infinite = false;
};

/// C = sqrt(sum u_k^2) over controller ticks, P = 1/sqrt(sum dx_k^2) over
/// every channel and integrator sample.
CostPerformance cost_performance(const std::vector<double>& u_ticks,
                                 const std::vector<std::vector<double>>& dx);

struct ExperimentResult {
    std::string label;
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> u;
    std::vector<std::string> machine_names;
    std::vector<std::vector<double>> speeds;  ///< [machine][sample]
    std::vector<pod::TickRecord> ticks;
    std::vector<double> u_ticks;              ///< modulation at each controller tick
    std::vector<grid::SimulationWarning> warnings;
    CostPerformance metrics;
    double gain = 0.0;
    std::optional<std::complex<double>> residue;
    std::optional<pod::EstimatorKind> estimator;
    bool diverged = false;
    std::string error;
};

/// Closed-loop (or open-loop when `controller` is empty) run with metrics.
/// Divergence is captured in the result rather than thrown.
ExperimentResult run_experiment(const grid::PowerSystem& ps, const std::vector<grid::Event>& events,
                                const grid::Channel& measurement, std::size_t actuator,
                                const std::optional<pod::PodConfig>& controller,
                                const grid::SimulationOptions& opt, std::string label = {});

}  // namespace podlab::harness

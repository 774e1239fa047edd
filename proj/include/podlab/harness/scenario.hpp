#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "podlab/grid/simulator.hpp"
#include "podlab/pod/phasor.hpp"

namespace podlab::harness {

/// Controller block of a scenario. Empty optionals mean "derive from modal
/// analysis of the case" (targeted mode, its residue, actuator limits).
struct ControllerSettings {
    pod::EstimatorKind estimator = pod::EstimatorKind::Kalman;
    std::optional<double> frequency_hz;
    double gain = 0.0;
    std::optional<double> beta_deg;
    bool use_residue = true;
    std::optional<std::complex<double>> residue;
    double k_c = 0.18;
    std::optional<std::pair<double, double>> limits;
};

/// Scenario file schema (JSON):
///
///   case:             path, relative to the scenario file or the data directory
///   t_end, dt, controller_period   seconds (defaults 20, 0.005, 0.02)
///   outages:          [branch, ...]   removed before the load flow
///   pss_disabled:     [machine, ...]  stabilizers off from the start
///   measurement:      {kind: speed | branch_power | voltage, target, end?: from | to}
///   actuator:         TCSC name (default: first TCSC)
///   events:           [{kind: fault, bus, t, duration | t_clear, r?, x?}
///                      {kind: trip, branch, t}
///                      {kind: toggle, controller: pss | pod, machine?, t, enabled}]
///   controller?:      {estimator: kf | lpf, f?: Hz, gain, beta_deg?, residue?: [U, V] | null,
///                      k_c?, limits?: [min, max]}
///   output?:          directory for exported files
///
/// Missing f, beta_deg, residue and limits are filled from modal analysis;
/// residue null selects the filter without control-input model.
struct Scenario {
    std::filesystem::path case_file;
    grid::CaseData case_data;
    std::vector<grid::Event> events;
    grid::Channel measurement;
    std::size_t actuator = 0;
    grid::SimulationOptions options;
    std::optional<ControllerSettings> controller;
    std::filesystem::path output;
};

/// `base_dir` resolves a relative case path. Throws ScenarioError with the
/// JSON path of the offending field.
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Concrete controller configuration for an initialized system.
pod::PodConfig resolve_controller(const ControllerSettings& settings, const grid::PowerSystem& ps,
                                  const grid::Channel& measurement, std::size_t actuator,
                                  const grid::SimulationOptions& options);

}  // namespace podlab::harness

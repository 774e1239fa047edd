#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "podlab/harness/experiment.hpp"
#include "podlab/modal/modes.hpp"

namespace podlab::harness {

/// Everything a study needs: the initialized model, the targeted mode with
/// its exact residue, the disturbance and the simulation settings.
struct StudySetup {
    grid::PowerSystem system;
    grid::Channel measurement;
    std::size_t actuator = 0;
    std::vector<grid::Event> events;
    grid::SimulationOptions options;
    modal::ModeInfo mode;
    double k_c = 0.5;
};

struct StudyPair {
    ExperimentResult plain;  ///< filter without control-input model
    ExperimentResult cim;    ///< filter with control-input model
};

std::filesystem::path default_data_dir();

/// SMIB case with a 50 ms terminal fault at 1 s, speed measured, 20 s run.
StudySetup make_smib_setup(const std::filesystem::path& case_file = default_data_dir() / "smib.json");

/// Degraded 39-bus case (line 2-25 out, PSS off on G8 and G9), 50 ms fault
/// at bus 2 at 1 s, active power 26->27 measured, TCSC on 26-29, 30 s run.
StudySetup make_ieee39_setup(const std::filesystem::path& case_file = default_data_dir() / "ieee39.json");

/// Controller for the setup's mode. Phase compensation follows `residue`;
/// the control-input model is used only when `use_cim`.
pod::PodConfig controller_config(const StudySetup& s, double gain, std::complex<double> residue, bool use_cim);

ExperimentResult run_controlled(const StudySetup& s, double gain, std::complex<double> residue, bool use_cim,
                                std::string label = {});
ExperimentResult run_uncontrolled(const StudySetup& s, std::string label = "open-loop");

StudyPair run_smib_study(const StudySetup& s, double gain_plain, double gain_cim);
StudyPair run_ieee39_study(const StudySetup& s, double gain);

struct GainCurve {
    std::vector<double> gains;
    std::vector<double> cost;
    std::vector<double> performance;
    std::vector<bool> valid;  ///< false for diverged runs
};

struct GainSweepResult {
    GainCurve plain;
    GainCurve cim;
};

/// Worker count from PODLAB_WORKERS, else the hardware concurrency.
std::size_t default_workers();

GainSweepResult gain_sweep(const StudySetup& s, const std::vector<double>& gains,
                           std::size_t workers = default_workers());

/// Performance at `target_cost` by piecewise-linear interpolation along the
/// curve's increasing-cost prefix. Empty when the cost is not reached.
std::optional<double> performance_at_cost(const GainCurve& curve, double target_cost);

/// Lowest-cost point of `other` checked against `curve`: true when at every
/// cost of `other` inside the overlap, `curve` performs at least as well.
bool dominates(const GainCurve& curve, const GainCurve& other, double rel_tol = 0.0);

struct SweepCell {
    double scale = 1.0;
    double angle_deg = 0.0;
    std::optional<double> performance_plain;
    std::optional<double> performance_cim;
    std::optional<double> advantage_pct;  ///< (P_cim - P_plain) / P_cim * 100
};

struct SweepGrid {
    std::vector<double> scales;
    std::vector<double> angles_deg;
    std::vector<double> gains;
    double target_cost = 0.0;
    std::complex<double> exact_residue;
    std::vector<SweepCell> cells;  ///< row-major: scale index, then angle index

    const SweepCell& at(std::size_t scale_index, std::size_t angle_index) const;
};

/// `n` values from 0.5 to 2, geometric; odd `n` hits 1 exactly.
std::vector<double> default_scales(std::size_t n = 7);
/// `n` values from -60 to 60 degrees, evenly spaced; odd `n` hits 0 exactly.
std::vector<double> default_angles_deg(std::size_t n = 13);
std::vector<double> default_sweep_gains();

/// Performance of both filters at a fixed cost for residues scaled and rotated
/// from the exact one. Cells are computed in parallel; results do not depend
/// on the worker count.
SweepGrid residue_sweep(const StudySetup& s, const std::vector<double>& scales,
                        const std::vector<double>& angles_deg, const std::vector<double>& gains,
                        double target_cost, std::size_t workers = default_workers());

/// Run `n` independent jobs on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace podlab::harness

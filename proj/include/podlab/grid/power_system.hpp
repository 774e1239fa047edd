#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "podlab/grid/devices.hpp"
#include "podlab/grid/network.hpp"

namespace podlab::grid {

struct MachineData {
    std::string name;
    std::size_t bus = 0;
    MachineParams params;
    double p_set = 0.0;   ///< load-flow active power, p.u.
    double v_set = 1.0;   ///< load-flow voltage magnitude, p.u.
    std::optional<SexsParams> avr;
    std::optional<PssParams> pss;
    std::optional<GovernorParams> governor;
};

/// Load-flow reference bus. An infinite slack is held at fixed voltage during
/// dynamics; a finite slack must host a machine.
struct SlackBus {
    std::size_t bus = 0;
    double v = 1.0;
    double angle_deg = 0.0;
    bool infinite = false;
};

/// Everything read from a case file, before initialization.
struct CaseData {
    std::string name;
    double s_base = 100.0;
    double f_base = 60.0;
    NetworkModel network;
    std::vector<MachineData> machines;
    std::vector<TcscParams> tcscs;
    SlackBus slack;
    /// Optional pre-solved bus voltages; skips the load flow when present.
    std::optional<CVector> preset_voltages;

    std::optional<std::size_t> find_machine(const std::string& name) const;
    std::optional<std::size_t> find_tcsc(const std::string& name) const;
};

/// Storage order of the flat state vector: for each machine in case order
/// its six machine states, then (if present) its AVR (2), PSS (2) and
/// governor (1) states; after all machines, one state per TCSC.
class StateLayout {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    explicit StateLayout(const CaseData& data);
    StateLayout() = default;

    std::size_t size() const { return size_; }
    std::size_t machine_count() const { return machine_.size(); }
    std::size_t tcsc_count() const { return tcsc_.size(); }
    std::size_t machine(std::size_t i) const { return machine_[i]; }
    std::size_t avr(std::size_t i) const { return avr_[i]; }
    std::size_t pss(std::size_t i) const { return pss_[i]; }
    std::size_t governor(std::size_t i) const { return gov_[i]; }
    std::size_t tcsc(std::size_t j) const { return tcsc_[j]; }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::size_t size_ = 0;
    std::vector<std::size_t> machine_, avr_, pss_, gov_, tcsc_;
    std::vector<std::string> labels_;
};

/// Per-device view of the differential states.
struct StructuredState {
    std::vector<std::array<double, kMachineStates>> machines;
    std::vector<std::optional<std::array<double, kSexsStates>>> avrs;
    std::vector<std::optional<std::array<double, kPssStates>>> pss;
    std::vector<std::optional<double>> governors;
    std::vector<double> tcscs;
};

Eigen::VectorXd flatten(const StateLayout& layout, const StructuredState& s);
StructuredState unflatten(const StateLayout& layout, const Eigen::VectorXd& x);

/// Differential states plus the bus voltages of the latest network solve.
struct DynamicState {
    Eigen::VectorXd x;
    CVector v;
};

struct Event {
    enum class Kind { BusFault, BranchTrip, ControllerToggle };
    Kind kind = Kind::BusFault;
    double t = 0.0;
    double t_clear = std::numeric_limits<double>::infinity();  ///< faults only
    std::size_t target = 0;      ///< bus (fault), branch (trip) or machine (pss toggle)
    Complex admittance{0.0, -1e6};  ///< fault shunt admittance, p.u.
    std::string controller;      ///< "pss" or "pod" for toggles
    bool enabled = true;
};

/// Network and controller conditions in force at some instant.
struct Conditions {
    std::map<std::size_t, Complex> faults;
    std::set<std::size_t> tripped;
    std::map<std::size_t, bool> pss_enabled;
    bool pod_enabled = true;

    bool operator==(const Conditions&) const = default;
};

Conditions conditions_at(const std::vector<Event>& events, double t);

/// Control inputs of the dynamic model.
struct Inputs {
    std::vector<double> tcsc_modulation;  ///< one per TCSC, fraction of line reactance
};

/// Measurement channel.
struct Channel {
    enum class Kind { MachineSpeed, BranchActivePower, BusVoltageMagnitude };
    Kind kind = Kind::MachineSpeed;
    std::size_t index = 0;
    bool from_end = true;  ///< branch power: measured at the from terminal
    std::string label;
};

struct LoadFlowResult {
    CVector v;
    int iterations = 0;
    double mismatch = 0.0;
};

/// Newton-Raphson power flow in polar form. Branch compensation from TCSCs
/// at their reference is included; loads are constant power.
LoadFlowResult solve_load_flow(const CaseData& data, double tol = 1e-12, int max_iter = 30);

/// Initialized, immutable power-system model. Safe to share across threads.
class PowerSystem {
public:
    static PowerSystem initialize(CaseData data);

    const CaseData& data() const { return data_; }
    const NetworkModel& network() const { return data_.network; }
    const StateLayout& layout() const { return layout_; }
    double omega_base() const;

    const Eigen::VectorXd& initial_state() const { return x0_; }
    const CVector& initial_voltages() const { return v0_; }
    Inputs zero_inputs() const;

    /// Admittance of all non-TCSC elements: branches, loads, Norton shunts and faults.
    CMatrix static_admittance(const Conditions& c) const;
    /// Full admittance including TCSC branches at the compensation in `x`.
    CMatrix admittance(const Eigen::VectorXd& x, const Conditions& c) const;
    void stamp_tcscs(CMatrix& y, const Eigen::VectorXd& x, const Conditions& c) const;

    /// Norton current injections for the machine EMFs in `x`.
    CVector norton_injections(const Eigen::VectorXd& x) const;
    /// Bus voltages for state `x`. `static_y` may carry a cached static admittance.
    CVector solve(const Eigen::VectorXd& x, const Conditions& c,
                  const CMatrix* static_y = nullptr) const;

    /// dx/dt given freshly solved bus voltages `v`.
    Eigen::VectorXd derivatives(const Eigen::VectorXd& x, const CVector& v, const Inputs& u,
                                const Conditions& c) const;

    double measure(const Channel& ch, const Eigen::VectorXd& x, const CVector& v) const;
    double tcsc_compensation(std::size_t j, const Eigen::VectorXd& x) const;

    const std::vector<Complex>& load_admittances() const { return load_y_; }
    double voltage_reference(std::size_t machine) const { return v_ref_[machine]; }
    double power_reference(std::size_t machine) const { return p_ref_[machine]; }

private:
    CaseData data_;
    StateLayout layout_;
    Eigen::VectorXd x0_;
    CVector v0_;
    std::vector<Complex> load_y_;
    std::vector<double> v_ref_;
    std::vector<double> p_ref_;
    std::vector<double> efd0_;
    std::set<std::size_t> tcsc_branches_;
    std::map<std::size_t, Complex> fixed_;
};

}  // namespace podlab::grid

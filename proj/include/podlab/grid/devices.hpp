#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>

namespace podlab::grid {

/// Sixth-order (subtransient) synchronous machine; all quantities on the
/// system base. Leakage, armature resistance and saturation are neglected.
/// The network sees the machine as a Norton source behind X''d, so the
/// subtransient reactances of both axes must coincide.
struct MachineParams {
    double h = 3.5;   ///< inertia constant, s
    double d = 0.0;   ///< damping, p.u. power per p.u. speed
    double xd = 1.81;
    double xq = 1.76;
    double xd_t = 0.3;
    double xq_t = 0.65;
    double xd_st = 0.23;
    double xq_st = 0.23;
    double td0_t = 8.0;
    double tq0_t = 1.0;
    double td0_st = 0.03;
    double tq0_st = 0.07;
};

/// Machine state slots, in storage order.
enum MachineSlot : std::size_t { kDelta = 0, kSpeed, kEqT, kEdT, kEqSt, kEdSt, kMachineStates };

/// SEXS exciter: lead-lag (TA/TB, TB) followed by a gain with lag TE and
/// a non-windup output limit.
struct SexsParams {
    double ta_tb = 0.1;
    double tb = 10.0;
    double k = 100.0;
    double te = 0.05;
    double efd_min = -3.0;
    double efd_max = 3.0;
};
enum SexsSlot : std::size_t { kSexsLeadLag = 0, kSexsEfd, kSexsStates };

/// Single-stage PSS: gain, washout, lead-lag, symmetric output limit. Input is
/// the machine's per-unit speed deviation; output adds to the AVR error.
struct PssParams {
    double k = 20.0;
    double tw = 10.0;
    double t1 = 0.5;
    double t2 = 0.05;
    double vmax = 0.1;
    bool enabled = true;
};
enum PssSlot : std::size_t { kPssWashout = 0, kPssLeadLag, kPssStates };

/// First-order droop governor/turbine.
struct GovernorParams {
    double r = 0.05;   ///< droop on system base: dP = -dw / r
    double tg = 0.5;
};

/// TCSC: first-order lag tracking the compensation reference plus the
/// modulation input, clamped to [kmin, kmax]. Compensation is a fraction
/// of the host branch reactance.
struct TcscParams {
    std::string name;
    std::size_t branch = 0;
    double x_ref = 0.1;
    double t = 0.1;
    double kmin = 0.01;
    double kmax = 0.5;
};

/// Stator currents and terminal quantities in the machine dq frame.
struct StatorQuantities {
    double id = 0.0;
    double iq = 0.0;
    double vd = 0.0;
    double vq = 0.0;
    double pe = 0.0;
};

/// Internal subtransient EMF as a network-frame phasor.
std::complex<double> subtransient_emf(double delta, double eq_st, double ed_st);

/// Rotate a network-frame phasor into the machine dq frame (d + j q).
std::complex<double> to_dq(std::complex<double> x, double delta);
/// Inverse of to_dq.
std::complex<double> from_dq(std::complex<double> dq, double delta);

StatorQuantities stator(const std::array<double, kMachineStates>& s, const MachineParams& p,
                        std::complex<double> terminal_voltage);

/// Time derivatives of the machine states given field voltage and mechanical power.
std::array<double, kMachineStates> machine_derivatives(const std::array<double, kMachineStates>& s,
                                                       const MachineParams& p,
                                                       const StatorQuantities& st, double efd,
                                                       double pm, double omega_base);

/// Lead-lag output of the SEXS for a given error signal.
double sexs_lead_lag_output(double lead_lag_state, double error, const SexsParams& p);

/// Limited first-order lag derivative: zero when the state sits on a limit
/// and would move further out.
double limited_lag(double state, double target, double t, double lo, double hi);

}  // namespace podlab::grid

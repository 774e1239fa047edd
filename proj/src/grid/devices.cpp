#include "podlab/grid/devices.hpp"

#include <cmath>

namespace podlab::grid {

namespace {
constexpr std::complex<double> kJ{0.0, 1.0};
}

// The q-axis leads the d-axis; a network phasor X maps to d + jq through
// X = (d + jq) e^{j(delta - pi/2)}.
std::complex<double> to_dq(std::complex<double> x, double delta) {
    return x * kJ * std::polar(1.0, -delta);
}

std::complex<double> from_dq(std::complex<double> dq, double delta) {
    return dq * -kJ * std::polar(1.0, delta);
}

std::complex<double> subtransient_emf(double delta, double eq_st, double ed_st) {
    return from_dq({ed_st, eq_st}, delta);
}

StatorQuantities stator(const std::array<double, kMachineStates>& s, const MachineParams& p,
                        std::complex<double> terminal_voltage) {
    const auto emf = subtransient_emf(s[kDelta], s[kEqSt], s[kEdSt]);
    const auto current = (emf - terminal_voltage) / (kJ * p.xd_st);
    const auto idq = to_dq(current, s[kDelta]);
    const auto vdq = to_dq(terminal_voltage, s[kDelta]);
    StatorQuantities out;
    out.id = idq.real();
    out.iq = idq.imag();
    out.vd = vdq.real();
    out.vq = vdq.imag();
    out.pe = s[kEqSt] * out.iq + s[kEdSt] * out.id;
    return out;
}

std::array<double, kMachineStates> machine_derivatives(const std::array<double, kMachineStates>& s,
                                                       const MachineParams& p,
                                                       const StatorQuantities& st, double efd,
                                                       double pm, double omega_base) {
    std::array<double, kMachineStates> ds{};
    ds[kDelta] = omega_base * s[kSpeed];
    ds[kSpeed] = (pm - st.pe - p.d * s[kSpeed]) / (2.0 * p.h);
    ds[kEqT] = (efd - s[kEqT] - (p.xd - p.xd_t) * st.id) / p.td0_t;
    ds[kEdT] = (-s[kEdT] + (p.xq - p.xq_t) * st.iq) / p.tq0_t;
    ds[kEqSt] = (s[kEqT] - s[kEqSt] - (p.xd_t - p.xd_st) * st.id) / p.td0_st;
    ds[kEdSt] = (s[kEdT] - s[kEdSt] + (p.xq_t - p.xq_st) * st.iq) / p.tq0_st;
    return ds;
}

double sexs_lead_lag_output(double lead_lag_state, double error, const SexsParams& p) {
    return p.ta_tb * error + (1.0 - p.ta_tb) * lead_lag_state;
}

double limited_lag(double state, double target, double t, double lo, double hi) {
    const double d = (target - state) / t;
    if (state >= hi && d > 0.0) return 0.0;
    if (state <= lo && d < 0.0) return 0.0;
    return d;
}

}  // namespace podlab::grid

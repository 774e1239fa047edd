#include "podlab/pod/phasor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace podlab::pod {

namespace {

void symmetrize(Eigen::Matrix3d& p) { p = 0.5 * (p + p.transpose()).eval(); }

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

double PodConfig::frequency_hz() const { return omega / (2.0 * std::numbers::pi); }

void PodConfig::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("pod: omega must be positive");
    if (!(period > 0.0)) throw std::invalid_argument("pod: period must be positive");
    if (!(k_c > 0.0 && k_c <= 1.0)) throw std::invalid_argument("pod: k_c must lie in (0, 1]");
    if (!(u_min <= u_max)) throw std::invalid_argument("pod: output limits are inverted");
    if (!(noise_scale > 0.0)) throw std::invalid_argument("pod: noise scale must be positive");
}

void PhasorEstimate::set_x(const Eigen::Vector3d& v) {
    average = v(0);
    d = v(1);
    q = v(2);
}

double PhasorEstimate::oscillation(double omega, double at) const {
    return d * std::cos(omega * at) - q * std::sin(omega * at);
}

double g_func(double t, double omega, double dt) {
    return 2.0 / omega * (-std::sin(omega * t) + std::sin(omega * (t + dt)));
}

double h_func(double t, double omega, double dt) {
    return 2.0 / omega * (std::cos(omega * t) - std::cos(omega * (t + dt)));
}

Eigen::RowVector3d observation_row(double omega, double t) {
    return {1.0, std::cos(omega * t), -std::sin(omega * t)};
}

KalmanMatrices kalman_matrices(const PodConfig& cfg, double t) {
    KalmanMatrices m;
    if (cfg.residue) {
        const double g = g_func(t, cfg.omega, cfg.period);
        const double h = h_func(t, cfg.omega, cfg.period);
        const double uu = cfg.residue->real();
        const double vv = cfg.residue->imag();
        m.g = {0.0, uu * g + vv * h, -uu * h + vv * g};
    }
    m.h = observation_row(cfg.omega, t);
    const double s = cfg.omega * cfg.period * cfg.k_c;
    m.qcov = cfg.noise_scale * s * s * Eigen::Matrix3d::Identity();
    m.r = cfg.noise_scale;
    return m;
}

PhasorEstimate initial_estimate(const PodConfig& cfg, double t0) {
    PhasorEstimate e;
    e.t = t0;
    e.p = 1e4 * cfg.omega * cfg.period * cfg.k_c * Eigen::Matrix3d::Identity();
    return e;
}

PhasorEstimate kf_predict(const PhasorEstimate& est, double u, const PodConfig& cfg) {
    const auto m = kalman_matrices(cfg, est.t);
    PhasorEstimate out = est;
    out.set_x(m.f * est.x() + m.g * u);
    out.p = m.f * est.p * m.f.transpose() + m.qcov;
    symmetrize(out.p);
    out.t = est.t + cfg.period;
    return out;
}

PhasorEstimate kf_correct(const PhasorEstimate& est, double y, const PodConfig& cfg, double* innovation) {
    const Eigen::RowVector3d h = observation_row(cfg.omega, est.t);
    const double nu = y - h.dot(est.x());
    const double s = h * est.p * h.transpose() + cfg.noise_scale;
    const Eigen::Vector3d k = est.p * h.transpose() / s;
    PhasorEstimate out = est;
    out.set_x(est.x() + k * nu);
    const Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - k * h;
    out.p = ikh * est.p * ikh.transpose() + cfg.noise_scale * k * k.transpose();
    symmetrize(out.p);
    if (innovation) *innovation = nu;
    return out;
}

PhasorEstimate lpf_estimate_update(LpfState& state, double y, double t, const PodConfig& cfg) {
    const double a = std::exp(-cfg.k_c * cfg.omega * cfg.period);
    const double c = std::cos(cfg.omega * t);
    const double sn = std::sin(cfg.omega * t);
    const double residual = y - (state.average + state.d * c - state.q * sn);
    state.average += (1.0 - a) * residual;
    state.d += (1.0 - a) * 2.0 * residual * c;
    state.q += (1.0 - a) * (-2.0 * residual * sn);
    PhasorEstimate e;
    e.average = state.average;
    e.d = state.d;
    e.q = state.q;
    e.t = t;
    return e;
}

double damping_control(const PhasorEstimate& est, const PodConfig& cfg, double t) {
    const double phase = cfg.omega * t + deg2rad(cfg.beta_deg);
    const double u = cfg.gain * (est.d * std::cos(phase) - est.q * std::sin(phase));
    return std::clamp(u, cfg.u_min, cfg.u_max);
}

PodState initial_pod_state(const PodConfig& cfg, double t0) {
    cfg.validate();
    PodState s;
    s.estimate = initial_estimate(cfg, t0);
    return s;
}

double pod_step(PodState& state, double y, const PodConfig& cfg, double t, TickRecord* record) {
    double nu = 0.0;
    double u = 0.0;
    if (cfg.estimator == EstimatorKind::Kalman) {
        state.estimate.t = t;
        state.estimate = kf_correct(state.estimate, y, cfg, &nu);
        u = damping_control(state.estimate, cfg, t);
        const PhasorEstimate corrected = state.estimate;
        state.estimate = kf_predict(corrected, u, cfg);
        if (record) *record = {t, y, corrected.average, corrected.d, corrected.q, nu, u};
        return u;
    }
    const PhasorEstimate e = lpf_estimate_update(state.lpf, y, t, cfg);
    nu = y - observation_row(cfg.omega, t).dot(e.x());
    u = damping_control(e, cfg, t);
    state.estimate = e;
    if (record) *record = {t, y, e.average, e.d, e.q, nu, u};
    return u;
}

PodController::PodController(PodConfig cfg, double t0) : cfg_(std::move(cfg)), state_(initial_pod_state(cfg_, t0)) {}

double PodController::step(double t, double y) {
    TickRecord rec;
    const double u = pod_step(state_, y, cfg_, t, &rec);
    log_.push_back(rec);
    return u;
}

}  // namespace podlab::pod

#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace podlab::pod {

enum class EstimatorKind { Lpf, Kalman };

struct PodConfig {
    double omega = 0.0;    ///< rad/s, targeted mode
    double period = 0.02;  ///< s
    double k_c = 0.5;      ///< estimator cutoff over mode frequency
    double gain = 0.0;
    double beta_deg = 0.0;
    /// Residue from actuator to measurement; absent gives the plain filter.
    std::optional<std::complex<double>> residue;
    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    EstimatorKind estimator = EstimatorKind::Kalman;
    /// Common factor applied to both noise covariances.
    double noise_scale = 1.0;

    double frequency_hz() const;
    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// X = [average, D, Q] valid at time t; the signal model is
/// y(t) = average + D cos(wt) - Q sin(wt).
struct PhasorEstimate {
    double average = 0.0;
    double d = 0.0;
    double q = 0.0;
    Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
    double t = 0.0;

    Eigen::Vector3d x() const { return {average, d, q}; }
    void set_x(const Eigen::Vector3d& v);
    /// Oscillatory part D cos(wt) - Q sin(wt).
    double oscillation(double omega, double at) const;
};

double g_func(double t, double omega, double dt);
double h_func(double t, double omega, double dt);

struct KalmanMatrices {
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    Eigen::RowVector3d h = Eigen::RowVector3d::Zero();
    Eigen::Matrix3d qcov = Eigen::Matrix3d::Zero();
    double r = 1.0;
};

/// Matrices for the interval [t, t + period].
KalmanMatrices kalman_matrices(const PodConfig& cfg, double t);
Eigen::RowVector3d observation_row(double omega, double t);

/// Zero state with the large diagonal start-up covariance.
PhasorEstimate initial_estimate(const PodConfig& cfg, double t0 = 0.0);

/// Advance to t + period with the control u applied over the interval.
PhasorEstimate kf_predict(const PhasorEstimate& est, double u, const PodConfig& cfg);

/// Measurement update at est.t. Writes the innovation if requested.
PhasorEstimate kf_correct(const PhasorEstimate& est, double y, const PodConfig& cfg,
                          double* innovation = nullptr);

/// First-order low-pass separation, discretized with an exact pole.
struct LpfState {
    double average = 0.0;
    double d = 0.0;
    double q = 0.0;
};

/// Update with the sample y taken at time t.
PhasorEstimate lpf_estimate_update(LpfState& state, double y, double t, const PodConfig& cfg);

/// u = K [D cos(wt + beta) - Q sin(wt + beta)], clamped to the limits.
double damping_control(const PhasorEstimate& est, const PodConfig& cfg, double t);

struct TickRecord {
    double t = 0.0;
    double y = 0.0;
    double average = 0.0;
    double d = 0.0;
    double q = 0.0;
    double innovation = 0.0;
    double u = 0.0;
};

struct PodState {
    PhasorEstimate estimate;
    LpfState lpf;
};

PodState initial_pod_state(const PodConfig& cfg, double t0 = 0.0);

/// One controller tick: correct with y, emit u from the corrected estimate,
/// then predict the next tick with that u.
double pod_step(PodState& state, double y, const PodConfig& cfg, double t, TickRecord* record = nullptr);

class PodController {
public:
    explicit PodController(PodConfig cfg, double t0 = 0.0);

    double step(double t, double y);
    const PodConfig& config() const { return cfg_; }
    const PodState& state() const { return state_; }
    const std::vector<TickRecord>& log() const { return log_; }

private:
    PodConfig cfg_;
    PodState state_;
    std::vector<TickRecord> log_;
};

}  // namespace podlab::pod

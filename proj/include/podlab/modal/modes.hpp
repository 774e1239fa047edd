#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "podlab/modal/linear_model.hpp"

namespace podlab::modal {

struct ModeInfo {
    std::complex<double> lambda;
    double frequency_hz = 0.0;   ///< Im(lambda) / 2pi
    double damping_ratio = 0.0;  ///< -Re(lambda) / |lambda|, 0 for lambda = 0
    Eigen::VectorXcd right;      ///< phi
    Eigen::RowVectorXcd left;    ///< psi, with psi * phi = 1
    std::complex<double> residue{0.0, 0.0};
    double condition = 1.0;      ///< |psi| |phi|
    std::string warning;
    std::size_t index = 0;       ///< position in the eigensolver output
};

/// Eigenvalues with right eigenvectors and left eigenvectors taken as rows of
/// the inverse right-eigenvector matrix. Modes whose eigenvalue condition
/// number exceeds `ill_conditioned` carry a warning.
std::vector<ModeInfo> eigendecompose(const Eigen::MatrixXd& a, double ill_conditioned = 1e10);

/// r = (c phi)(psi b).
std::complex<double> residue(const LinearModel& lm, const ModeInfo& mode);

/// Eigendecomposition of lm.a with the residue filled in for every mode.
std::vector<ModeInfo> analyze(const LinearModel& lm);

/// 180 deg - arg(r), in (-180, 180]. Throws std::domain_error for r = 0.
double phase_compensation(std::complex<double> r);

/// Modes with lower_hz <= f <= upper_hz, least damped first (ties: lower f).
/// Only the positive-frequency member of each conjugate pair is kept.
std::vector<ModeInfo> screen_modes(const std::vector<ModeInfo>& modes, double lower_hz = 0.1,
                                   double upper_hz = 3.0,
                                   std::size_t top_k = std::numeric_limits<std::size_t>::max());

/// CSV with columns re, im, f_hz, zeta, r_abs, r_arg_deg, beta_deg.
void write_mode_table(std::ostream& out, const std::vector<ModeInfo>& modes);

/// Sum of lambda_i phi_i psi_i; equals A for a diagonalizable matrix.
Eigen::MatrixXcd reconstruct(const std::vector<ModeInfo>& modes);

}  // namespace podlab::modal

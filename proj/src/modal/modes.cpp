#include "podlab/modal/modes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace podlab::modal {

std::vector<ModeInfo> eigendecompose(const Eigen::MatrixXd& a, double ill_conditioned) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eigendecompose: matrix is not square");
    if (!a.allFinite()) throw std::invalid_argument("eigendecompose: matrix has non-finite entries");
    const auto n = a.rows();
    std::vector<ModeInfo> modes;
    if (n == 0) return modes;

    Eigen::EigenSolver<Eigen::MatrixXd> es(a, true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecompose: eigensolver did not converge");
    const Eigen::MatrixXcd phi = es.eigenvectors();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(phi);
    const Eigen::MatrixXcd psi = lu.inverse();

    modes.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        ModeInfo m;
        m.index = static_cast<std::size_t>(i);
        m.lambda = es.eigenvalues()(i);
        m.frequency_hz = m.lambda.imag() / (2.0 * std::numbers::pi);
        const double mag = std::abs(m.lambda);
        m.damping_ratio = mag > 0.0 ? -m.lambda.real() / mag : 0.0;
        m.right = phi.col(i);
        m.left = psi.row(i);
        m.condition = m.right.norm() * m.left.norm();
        if (!lu.isInvertible() || !std::isfinite(m.condition) || m.condition > ill_conditioned) {
            std::ostringstream msg;
            msg << "eigenvector condition number " << m.condition << " exceeds " << ill_conditioned
                << "; matrix may be defective";
            m.warning = msg.str();
        }
        modes.push_back(std::move(m));
    }
    return modes;
}

std::complex<double> residue(const LinearModel& lm, const ModeInfo& mode) {
    lm.validate();
    if (mode.right.size() != lm.order() || mode.left.size() != lm.order()) {
        throw std::invalid_argument("residue: mode and model dimensions differ");
    }
    const std::complex<double> c_phi = (lm.c.cast<std::complex<double>>() * mode.right)(0);
    const std::complex<double> psi_b = (mode.left * lm.b.cast<std::complex<double>>())(0);
    return c_phi * psi_b;
}

std::vector<ModeInfo> analyze(const LinearModel& lm) {
    lm.validate();
    auto modes = eigendecompose(lm.a);
    for (auto& m : modes) m.residue = residue(lm, m);
    return modes;
}

double phase_compensation(std::complex<double> r) {
    if (r == std::complex<double>{0.0, 0.0}) {
        throw std::domain_error("phase compensation undefined for a zero residue");
    }
    double beta = 180.0 - std::arg(r) * 180.0 / std::numbers::pi;
    while (beta > 180.0) beta -= 360.0;
    while (beta <= -180.0) beta += 360.0;
    return beta;
}

std::vector<ModeInfo> screen_modes(const std::vector<ModeInfo>& modes, double lower_hz, double upper_hz,
                                   std::size_t top_k) {
    std::vector<ModeInfo> out;
    for (const auto& m : modes) {
        if (m.frequency_hz > 0.0 && m.frequency_hz >= lower_hz && m.frequency_hz <= upper_hz) out.push_back(m);
    }
    std::stable_sort(out.begin(), out.end(), [](const ModeInfo& x, const ModeInfo& y) {
        if (x.damping_ratio != y.damping_ratio) return x.damping_ratio < y.damping_ratio;
        return x.frequency_hz < y.frequency_hz;
    });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

void write_mode_table(std::ostream& out, const std::vector<ModeInfo>& modes) {
    const auto old_flags = out.flags();
    const auto old_prec = out.precision();
    out << "re,im,f_hz,zeta,r_abs,r_arg_deg,beta_deg\n";
    out << std::setprecision(10);
    for (const auto& m : modes) {
        const double r_abs = std::abs(m.residue);
        const double r_arg = std::arg(m.residue) * 180.0 / std::numbers::pi;
        out << m.lambda.real() << ',' << m.lambda.imag() << ',' << m.frequency_hz << ',' << m.damping_ratio << ','
            << r_abs << ',' << r_arg << ',';
        if (r_abs > 0.0) {
            out << phase_compensation(m.residue);
        } else {
            out << "nan";
        }
        out << '\n';
    }
    out.flags(old_flags);
    out.precision(old_prec);
}

Eigen::MatrixXcd reconstruct(const std::vector<ModeInfo>& modes) {
    if (modes.empty()) return {};
    const auto n = modes.front().right.size();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& m : modes) a += m.lambda * m.right * m.left;
    return a;
}

}  // namespace podlab::modal

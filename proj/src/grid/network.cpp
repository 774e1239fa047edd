#include "podlab/grid/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "podlab/errors.hpp"

namespace podlab::grid {

std::optional<std::size_t> NetworkModel::find_bus(const std::string& name) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> NetworkModel::find_branch(const std::string& name) const {
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (branches[i].name == name) return i;
    }
    return std::nullopt;
}

Complex series_admittance(const Branch& br, double k) {
    const Complex z{br.z.real(), br.z.imag() * (1.0 - k)};
    return 1.0 / z;
}

void stamp_branch(CMatrix& y, const Branch& br, double k, double sign) {
    const Complex ys = series_admittance(br, k);
    const Complex ysh{0.0, br.b / 2.0};
    const double t = br.ratio;
    const auto f = static_cast<Eigen::Index>(br.from);
    const auto to = static_cast<Eigen::Index>(br.to);
    y(f, f) += sign * (ys + ysh) / (t * t);
    y(to, to) += sign * (ys + ysh);
    y(f, to) -= sign * ys / t;
    y(to, f) -= sign * ys / t;
}

std::vector<std::size_t> unreachable_buses(const NetworkModel& net,
                                           const std::set<std::size_t>& tripped) {
    const std::size_t n = net.bus_count();
    if (n == 0) return {};
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        const auto& br = net.branches[i];
        if (!br.in_service || tripped.count(i)) continue;
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> todo;
    todo.push(0);
    seen[0] = true;
    while (!todo.empty()) {
        const auto b = todo.front();
        todo.pop();
        for (auto nb : adj[b]) {
            if (!seen[nb]) {
                seen[nb] = true;
                todo.push(nb);
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) out.push_back(i);
    }
    return out;
}

CMatrix assemble_admittance(const NetworkModel& net, const AdmittanceTerms& terms) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    if (auto lost = unreachable_buses(net, terms.tripped); !lost.empty()) {
        std::ostringstream msg;
        msg << "islanding: bus(es)";
        for (auto b : lost) msg << ' ' << net.buses[b].name;
        msg << " disconnected from " << net.buses.front().name;
        throw IslandingError(msg.str());
    }
    CMatrix y = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        const auto& br = net.branches[i];
        if (!br.in_service || terms.tripped.count(i) || terms.excluded.count(i)) continue;
        if (std::abs(br.z) == 0.0 || !std::isfinite(std::abs(br.z))) {
            throw ModelError("branch " + br.name + " has zero or non-finite impedance");
        }
        const auto it = terms.compensation.find(i);
        stamp_branch(y, br, it == terms.compensation.end() ? 0.0 : it->second);
    }
    for (Eigen::Index b = 0; b < n && b < static_cast<Eigen::Index>(terms.bus_shunts.size()); ++b) {
        y(b, b) += terms.bus_shunts[static_cast<std::size_t>(b)];
    }
    return y;
}

CVector solve_network(const CMatrix& y, const CVector& injections,
                      const std::map<std::size_t, Complex>& fixed) {
    const auto n = y.rows();
    std::vector<Eigen::Index> free;
    free.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!fixed.count(static_cast<std::size_t>(i))) free.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());

    CVector v(n);
    for (const auto& [bus, val] : fixed) v(static_cast<Eigen::Index>(bus)) = val;
    if (nf == 0) return v;

    CMatrix yff(nf, nf);
    CVector rhs(nf);
    for (Eigen::Index r = 0; r < nf; ++r) {
        rhs(r) = injections(free[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < nf; ++c) {
            yff(r, c) = y(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
        }
        for (const auto& [bus, val] : fixed) {
            rhs(r) -= y(free[static_cast<std::size_t>(r)], static_cast<Eigen::Index>(bus)) * val;
        }
    }

    Eigen::PartialPivLU<CMatrix> lu(yff);
    const double scale = std::max(yff.cwiseAbs().maxCoeff(), 1.0);
    const auto& packed = lu.matrixLU();
    for (Eigen::Index j = 0; j < nf; ++j) {
        if (!(std::abs(packed(j, j)) > 1e-13 * scale)) {
            const auto bus = static_cast<std::size_t>(free[static_cast<std::size_t>(j)]);
            throw SingularNetworkError(
                "singular network admittance: zero pivot at bus index " + std::to_string(bus), bus);
        }
    }
    const CVector vf = lu.solve(rhs);
    const double residual = (yff * vf - rhs).cwiseAbs().maxCoeff();
    const double tol = 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff());
    if (!(residual < tol)) {
        throw SingularNetworkError("network solve residual " + std::to_string(residual) +
                                       " above tolerance",
                                   static_cast<std::size_t>(free.front()));
    }
    for (Eigen::Index r = 0; r < nf; ++r) v(free[static_cast<std::size_t>(r)]) = vf(r);
    return v;
}

Complex branch_current_from(const Branch& br, const CVector& v, double k) {
    const Complex ys = series_admittance(br, k);
    const Complex ysh{0.0, br.b / 2.0};
    const Complex vf = v(static_cast<Eigen::Index>(br.from));
    const Complex vt = v(static_cast<Eigen::Index>(br.to));
    const double t = br.ratio;
    return (ys + ysh) / (t * t) * vf - ys / t * vt;
}

Complex branch_current_to(const Branch& br, const CVector& v, double k) {
    const Complex ys = series_admittance(br, k);
    const Complex ysh{0.0, br.b / 2.0};
    const Complex vf = v(static_cast<Eigen::Index>(br.from));
    const Complex vt = v(static_cast<Eigen::Index>(br.to));
    return (ys + ysh) * vt - ys / br.ratio * vf;
}

}  // namespace podlab::grid

#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace podlab::grid {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct Bus {
    std::string name;
    double base_kv = 0.0;
};

/// Pi-model branch. An off-nominal `ratio` sits on the `from` side.
struct Branch {
    std::string name;
    std::size_t from = 0;
    std::size_t to = 0;
    Complex z{0.0, 0.0};  ///< series impedance, p.u.
    double b = 0.0;       ///< total shunt susceptance, p.u.
    double ratio = 1.0;
    bool in_service = true;
};

/// Constant-power load as specified in the case; converted to a
/// constant impedance at initialization.
struct Load {
    std::size_t bus = 0;
    double p = 0.0;
    double q = 0.0;
};

struct NetworkModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Load> loads;

    std::size_t bus_count() const { return buses.size(); }
    std::optional<std::size_t> find_bus(const std::string& name) const;
    std::optional<std::size_t> find_branch(const std::string& name) const;
};

/// Everything beyond the branch list that enters the nodal admittance.
struct AdmittanceTerms {
    std::vector<Complex> bus_shunts;          ///< per bus; loads, Norton shunts, faults
    std::set<std::size_t> tripped;            ///< branch indices removed
    std::set<std::size_t> excluded;           ///< omitted from the matrix, still connecting
    std::map<std::size_t, double> compensation;  ///< branch -> series compensation fraction
};

/// Series admittance of a branch with a fraction `k` of its reactance compensated.
Complex series_admittance(const Branch& br, double k = 0.0);

/// Adds the four pi-model stamps of `br` into `y`, scaled by `sign` (+1 add, -1 remove).
void stamp_branch(CMatrix& y, const Branch& br, double k = 0.0, double sign = 1.0);

/// Nodal admittance of the in-service, non-tripped branches plus bus shunts.
/// Throws IslandingError if the remaining branch graph is disconnected.
CMatrix assemble_admittance(const NetworkModel& net, const AdmittanceTerms& terms);

/// Buses unreachable from bus 0 over in-service, non-tripped branches.
std::vector<std::size_t> unreachable_buses(const NetworkModel& net,
                                           const std::set<std::size_t>& tripped);

/// Solve Y V = I where some buses have fixed voltage. `fixed` maps bus -> voltage;
/// `injections` has one entry per bus (ignored at fixed buses).
/// The returned vector carries every bus voltage. Residual is checked to 1e-10.
CVector solve_network(const CMatrix& y, const CVector& injections,
                      const std::map<std::size_t, Complex>& fixed);

/// Current flowing from `from` into the branch, measured at the `from` terminal.
Complex branch_current_from(const Branch& br, const CVector& v, double k = 0.0);
/// Current flowing from `to` into the branch, measured at the `to` terminal.
Complex branch_current_to(const Branch& br, const CVector& v, double k = 0.0);

}  // namespace podlab::grid

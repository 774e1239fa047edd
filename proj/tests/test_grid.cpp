#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "podlab/errors.hpp"
#include "podlab/grid/case_io.hpp"
#include "podlab/grid/network.hpp"
#include "podlab/grid/power_system.hpp"
#include "podlab/grid/simulator.hpp"
#include "support.hpp"

using namespace podlab;
using namespace podlab::grid;
using podlab::testing::data_file;

namespace {

// Per-branch summation written out independently of stamp_branch.
CMatrix brute_force_admittance(const NetworkModel& net, const std::vector<Complex>& shunts,
                               const std::set<std::size_t>& tripped) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    CMatrix y = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        const auto& br = net.branches[i];
        if (!br.in_service || tripped.count(i)) continue;
        const Complex ys = 1.0 / br.z;
        const Complex half_b(0.0, br.b / 2.0);
        const double a = br.ratio;
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) {
                const bool rf = r == static_cast<Eigen::Index>(br.from);
                const bool rt = r == static_cast<Eigen::Index>(br.to);
                const bool cf = c == static_cast<Eigen::Index>(br.from);
                const bool ct = c == static_cast<Eigen::Index>(br.to);
                if (rf && cf) y(r, c) += (ys + half_b) / (a * a);
                if (rt && ct) y(r, c) += ys + half_b;
                if ((rf && ct) || (rt && cf)) y(r, c) += -ys / a;
            }
        }
    }
    for (Eigen::Index b = 0; b < n; ++b) y(b, b) += shunts[static_cast<std::size_t>(b)];
    return y;
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("two-bus line gives j2.0 off the diagonal") {
    NetworkModel net;
    net.buses = {{"a", 1.0}, {"b", 1.0}};
    Branch br;
    br.from = 0;
    br.to = 1;
    br.z = {0.0, 0.5};
    net.branches.push_back(br);
    const CMatrix y = assemble_admittance(net, {});
    CHECK(std::abs(y(0, 1) - Complex(0.0, 2.0)) < 1e-15);
    CHECK(std::abs(y(1, 0) - Complex(0.0, 2.0)) < 1e-15);
    CHECK(std::abs(y(0, 0) - Complex(0.0, -2.0)) < 1e-15);
}

TEST_CASE("39-bus admittance matches brute-force summation") {
    const auto c = load_case(data_file("ieee39.json"));
    std::mt19937_64 rng(7);
    std::vector<Complex> shunts(c.network.bus_count());
    for (auto& s : shunts) s = {testing::uniform(rng, 0, 2), testing::uniform(rng, -2, 2)};
    AdmittanceTerms terms;
    terms.bus_shunts = shunts;
    CHECK(max_abs(assemble_admittance(c.network, terms) - brute_force_admittance(c.network, shunts, {})) < 1e-12);

    // Random subsets of tripped branches, skipping the ones that island.
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        std::set<std::size_t> tripped;
        for (int k = 0; k < 3; ++k) {
            tripped.insert(std::uniform_int_distribution<std::size_t>(0, c.network.branches.size() - 1)(rng));
        }
        if (!unreachable_buses(c.network, tripped).empty()) continue;
        terms.tripped = tripped;
        CHECK(max_abs(assemble_admittance(c.network, terms) - brute_force_admittance(c.network, shunts, tripped)) <
              1e-12);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("tripping a branch equals assembling without it") {
    const auto c = load_case(data_file("ieee39.json"));
    const auto idx = *c.network.find_branch("L2-25");
    AdmittanceTerms terms;
    terms.tripped = {idx};
    auto removed = c.network;
    removed.branches.erase(removed.branches.begin() + static_cast<std::ptrdiff_t>(idx));
    CHECK(max_abs(assemble_admittance(c.network, terms) - assemble_admittance(removed, {})) == 0.0);
}

TEST_CASE("islanding trip is rejected") {
    NetworkModel net;
    net.buses = {{"a", 1.0}, {"b", 1.0}};
    Branch br;
    br.from = 0;
    br.to = 1;
    br.z = {0.0, 0.5};
    net.branches.push_back(br);
    AdmittanceTerms terms;
    terms.tripped = {0};
    CHECK_THROWS_AS(assemble_admittance(net, terms), IslandingError);
}

TEST_CASE("fixed bus with no injections gives the no-load profile") {
    NetworkModel net;
    net.buses = {{"a", 1.0}, {"b", 1.0}, {"c", 1.0}};
    Branch b1;
    b1.from = 0;
    b1.to = 1;
    b1.z = {0.01, 0.1};
    Branch b2 = b1;
    b2.from = 1;
    b2.to = 2;
    net.branches = {b1, b2};
    const CMatrix y = assemble_admittance(net, {});
    const CVector v = solve_network(y, CVector::Zero(3), {{0, Complex(1.0, 0.0)}});
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(v(i) - Complex(1.0, 0.0)) < 1e-12);
}

TEST_CASE("39-bus operating point satisfies Kirchhoff's current law") {
    const auto ps = PowerSystem::initialize(load_case(data_file("ieee39.json")));
    const auto& x0 = ps.initial_state();
    const CVector v = ps.solve(x0, {});
    const CVector inj = ps.norton_injections(x0);
    const auto& net = ps.network();
    std::vector<Complex> balance(net.bus_count(), Complex{0.0, 0.0});
    std::map<std::size_t, double> comp;
    for (std::size_t j = 0; j < ps.data().tcscs.size(); ++j) comp[ps.data().tcscs[j].branch] = ps.tcsc_compensation(j, x0);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        const auto& br = net.branches[i];
        if (!br.in_service) continue;
        const double k = comp.count(i) ? comp[i] : 0.0;
        balance[br.from] += branch_current_from(br, v, k);
        balance[br.to] += branch_current_to(br, v, k);
        // Series current recomputed from the terminal voltages and the
        // pi-model; the two ends must agree.
        const Complex ys = 1.0 / Complex(br.z.real(), br.z.imag() * (1.0 - k));
        const Complex series = (v(br.from) / br.ratio - v(br.to)) * ys;
        const Complex at_to = -series + Complex(0.0, br.b / 2.0) * v(br.to);
        CHECK(std::abs(branch_current_to(br, v, k) - at_to) < 1e-9);
    }
    const auto slack = ps.data().slack.bus;
    for (std::size_t b = 0; b < net.bus_count(); ++b) {
        if (b == slack) continue;
        Complex shunt = ps.load_admittances()[b];
        for (const auto& m : ps.data().machines) {
            if (m.bus == b) shunt += 1.0 / Complex(0.0, m.params.xd_st);
        }
        CHECK(std::abs(balance[b] + shunt * v(b) - inj(b)) < 1e-9);
    }
}

TEST_CASE("bolted terminal fault collapses the SMIB terminal voltage") {
    const auto ps = PowerSystem::initialize(load_case(data_file("smib.json")));
    Conditions c;
    c.faults[*ps.network().find_bus("B1")] = Complex{0.0, -1e6};
    const CVector v = ps.solve(ps.initial_state(), c);
    CHECK(std::abs(v(0)) < 0.1);
}

TEST_CASE("initial state is an equilibrium") {
    for (const auto* name : {"smib.json", "ieee39.json"}) {
        const auto ps = PowerSystem::initialize(load_case(data_file(name)));
        const auto& x0 = ps.initial_state();
        const auto dx = ps.derivatives(x0, ps.solve(x0, {}), ps.zero_inputs(), {});
        CHECK(dx.cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("speed deviation drives the rotor angle at omega_base") {
    const auto ps = PowerSystem::initialize(load_case(data_file("smib.json")));
    Eigen::VectorXd x = ps.initial_state();
    const auto i = ps.layout().machine(0);
    x(i + kSpeed) = 0.01;
    const auto dx = ps.derivatives(x, ps.solve(x, {}), ps.zero_inputs(), {});
    CHECK(dx(i + kDelta) == testing::approx(0.01 * 2.0 * std::numbers::pi * 60.0).epsilon(1e-14));
}

TEST_CASE("TCSC lag responds to modulation") {
    const auto ps = PowerSystem::initialize(load_case(data_file("smib.json")));
    const auto& x0 = ps.initial_state();
    auto u = ps.zero_inputs();
    u.tcsc_modulation[0] = 0.05;
    const auto dx = ps.derivatives(x0, ps.solve(x0, {}), u, {});
    CHECK(dx(ps.layout().tcsc(0)) == testing::approx(0.05 / ps.data().tcscs[0].t).epsilon(1e-12));
}

TEST_CASE("flatten and unflatten are inverse") {
    const auto ps = PowerSystem::initialize(load_case(data_file("ieee39.json")));
    std::mt19937_64 rng(3);
    Eigen::VectorXd x(ps.layout().size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = testing::uniform(rng, -5, 5);
    CHECK((flatten(ps.layout(), unflatten(ps.layout(), x)) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("modified Euler step") {
    auto zero = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()).eval(); };
    auto decay = [](const Eigen::VectorXd& x) { return (-x).eval(); };
    Eigen::VectorXd x0(1);
    x0 << 1.0;
    CHECK(step_modified_euler(zero, x0, 0.005)(0) == 1.0);
    CHECK(step_modified_euler(decay, x0, 0.005)(0) == testing::approx(0.9950125).epsilon(1e-15));
}

TEST_CASE("modified Euler converges with order two") {
    auto decay = [](const Eigen::VectorXd& x) { return (-x).eval(); };
    auto error_at = [&](int steps) {
        Eigen::VectorXd x(1);
        x << 1.0;
        const double dt = 1.0 / steps;
        for (int k = 0; k < steps; ++k) x = step_modified_euler(decay, x, dt);
        return std::abs(x(0) - std::exp(-1.0));
    };
    double prev = error_at(25);
    for (int steps : {50, 100, 200, 400}) {
        const double e = error_at(steps);
        CHECK(prev / e == testing::approx(4.0).epsilon(0.05));
        prev = e;
    }
}

TEST_CASE("undisturbed simulation stays at the operating point") {
    for (const auto* name : {"smib.json", "ieee39.json"}) {
        const auto ps = PowerSystem::initialize(load_case(data_file(name)));
        SimulationOptions opt;
        opt.t_end = 10.0;
        const auto raw = run_simulation(ps, {}, testing::speed_channel(), 0, {}, opt);
        const auto& x0 = ps.initial_state();
        double worst = 0.0;
        for (const auto& x : raw.states) worst = std::max(worst, (x - x0).cwiseAbs().maxCoeff());
        CHECK(worst < 1e-6);
        CHECK(raw.t.size() == 2001);
    }
}

TEST_CASE("events are snapped onto the step grid") {
    std::vector<SimulationWarning> warnings;
    Event e;
    e.t = 1.0012;
    e.t_clear = 1.0512;
    const auto snapped = snap_events({e}, 0.005, warnings);
    CHECK(std::abs(snapped[0].t_clear - snapped[0].t - 0.05) < 1e-12);
    CHECK(!warnings.empty());
}

TEST_CASE("a 50 ms fault lasts exactly ten steps") {
    const auto ps = PowerSystem::initialize(load_case(data_file("smib.json")));
    Event e;
    e.kind = Event::Kind::BusFault;
    e.t = 1.0;
    e.t_clear = 1.05;
    e.target = 0;
    SimulationOptions opt;
    opt.t_end = 1.2;
    opt.record_voltages = true;
    const auto raw = run_simulation(ps, {e}, testing::speed_channel(), 0, {}, opt);
    int faulted = 0;
    for (const auto& v : raw.voltages) faulted += std::abs(v(0)) < 0.1 ? 1 : 0;
    CHECK(faulted == 10);
}

TEST_CASE("case parser reports the offending field") {
    auto j = read_json_file(data_file("smib.json"));
    j["branches"][1]["to"] = "nowhere";
    try {
        parse_case(j);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(std::string(e.what()).find("branches[1]") != std::string::npos);
    }
}

TEST_CASE("unequal subtransient reactances are rejected") {
    auto j = read_json_file(data_file("smib.json"));
    j["machines"][0]["params"]["Xq_st"] = 0.25;
    CHECK_THROWS(PowerSystem::initialize(parse_case(j)));
}

#include "podlab/harness/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "podlab/errors.hpp"
#include "podlab/grid/case_io.hpp"

namespace podlab::harness {

namespace {

constexpr double kFaultTime = 1.0;
constexpr double kFaultDuration = 0.05;

std::size_t require_bus(const grid::CaseData& c, const std::string& name) {
    if (auto b = c.network.find_bus(name)) return *b;
    throw ScenarioError("case has no bus '" + name + "'");
}

std::size_t require_branch(const grid::CaseData& c, const std::string& name) {
    if (auto b = c.network.find_branch(name)) return *b;
    throw ScenarioError("case has no branch '" + name + "'");
}

std::size_t require_machine(const grid::CaseData& c, const std::string& name) {
    if (auto m = c.find_machine(name)) return *m;
    throw ScenarioError("case has no machine '" + name + "'");
}

std::size_t require_tcsc(const grid::CaseData& c, const std::string& name) {
    if (auto t = c.find_tcsc(name)) return *t;
    throw ScenarioError("case has no TCSC '" + name + "'");
}

grid::Event fault_at(std::size_t bus) {
    grid::Event e;
    e.kind = grid::Event::Kind::BusFault;
    e.t = kFaultTime;
    e.t_clear = kFaultTime + kFaultDuration;
    e.target = bus;
    return e;
}

modal::ModeInfo targeted_mode(const grid::PowerSystem& ps, const grid::Channel& ch, std::size_t actuator) {
    const auto lm = modal::linearize(ps, ch, actuator);
    const auto modes = modal::screen_modes(modal::analyze(lm), 0.1, 3.0, 1);
    if (modes.empty()) throw ModelError("no electromechanical mode in the 0.1-3 Hz band");
    return modes.front();
}

std::complex<double> rotate(std::complex<double> r, double scale, double angle_deg) {
    return r * scale * std::polar(1.0, angle_deg * std::numbers::pi / 180.0);
}

}  // namespace

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("PODLAB_DATA")) return env;
    return PODLAB_DATA_DIR;
}

StudySetup make_smib_setup(const std::filesystem::path& case_file) {
    auto data = grid::load_case(case_file);
    const auto bus = require_bus(data, "B1");
    const auto machine = require_machine(data, "G1");
    const auto tcsc = require_tcsc(data, "TCSC1");
    StudySetup s{grid::PowerSystem::initialize(std::move(data)), {}, tcsc, {}, {}, {}, 0.18};
    s.measurement.kind = grid::Channel::Kind::MachineSpeed;
    s.measurement.index = machine;
    s.measurement.label = "speed_G1";
    s.events = {fault_at(bus)};
    s.options.t_end = 20.0;
    s.mode = targeted_mode(s.system, s.measurement, s.actuator);
    return s;
}

StudySetup make_ieee39_setup(const std::filesystem::path& case_file) {
    auto data = grid::load_case(case_file);
    data.network.branches[require_branch(data, "L2-25")].in_service = false;
    for (const char* name : {"G8", "G9"}) {
        auto& m = data.machines[require_machine(data, name)];
        if (m.pss) m.pss->enabled = false;
    }
    const auto bus = require_bus(data, "2");
    const auto line = require_branch(data, "L26-27");
    const auto tcsc = require_tcsc(data, "TCSC1");
    StudySetup s{grid::PowerSystem::initialize(std::move(data)), {}, tcsc, {}, {}, {}, 0.18};
    s.measurement.kind = grid::Channel::Kind::BranchActivePower;
    s.measurement.index = line;
    s.measurement.from_end = true;
    s.measurement.label = "p_26_27";
    s.events = {fault_at(bus)};
    s.options.t_end = 30.0;
    s.mode = targeted_mode(s.system, s.measurement, s.actuator);
    return s;
}

pod::PodConfig controller_config(const StudySetup& s, double gain, std::complex<double> residue, bool use_cim) {
    pod::PodConfig c;
    c.omega = s.mode.lambda.imag();
    c.period = s.options.controller_period;
    c.k_c = s.k_c;
    c.gain = gain;
    c.beta_deg = modal::phase_compensation(residue);
    if (use_cim) c.residue = residue;
    const auto& t = s.system.data().tcscs.at(s.actuator);
    c.u_min = t.kmin - t.x_ref;
    c.u_max = t.kmax - t.x_ref;
    c.estimator = pod::EstimatorKind::Kalman;
    return c;
}

ExperimentResult run_controlled(const StudySetup& s, double gain, std::complex<double> residue, bool use_cim,
                                std::string label) {
    return run_experiment(s.system, s.events, s.measurement, s.actuator, controller_config(s, gain, residue, use_cim),
                          s.options, std::move(label));
}

ExperimentResult run_uncontrolled(const StudySetup& s, std::string label) {
    return run_experiment(s.system, s.events, s.measurement, s.actuator, std::nullopt, s.options, std::move(label));
}

StudyPair run_smib_study(const StudySetup& s, double gain_plain, double gain_cim) {
    StudyPair p;
    parallel_for(2, default_workers(), [&](std::size_t i) {
        if (i == 0) {
            p.plain = run_controlled(s, gain_plain, s.mode.residue, false, "p-pod-0");
        } else {
            p.cim = run_controlled(s, gain_cim, s.mode.residue, true, "p-pod-cim");
        }
    });
    return p;
}

StudyPair run_ieee39_study(const StudySetup& s, double gain) { return run_smib_study(s, gain, gain); }

std::size_t default_workers() {
    if (const char* env = std::getenv("PODLAB_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

struct RunPoint {
    double cost = std::nan("");
    double performance = std::nan("");
    bool valid = false;
};

RunPoint point_of(const ExperimentResult& r) {
    if (r.diverged) return {};
    return {r.metrics.cost, r.metrics.performance, true};
}

GainCurve curve_from(const std::vector<double>& gains, const std::vector<RunPoint>& runs) {
    GainCurve c;
    c.gains = gains;
    for (const auto& r : runs) {
        c.cost.push_back(r.cost);
        c.performance.push_back(r.performance);
        c.valid.push_back(r.valid);
    }
    return c;
}

}  // namespace

GainSweepResult gain_sweep(const StudySetup& s, const std::vector<double>& gains, std::size_t workers) {
    if (gains.size() < 5) throw std::invalid_argument("gain sweep needs at least five gains");
    std::vector<double> sorted = gains;
    std::sort(sorted.begin(), sorted.end());
    std::vector<RunPoint> runs(2 * sorted.size());
    parallel_for(runs.size(), workers, [&](std::size_t i) {
        const bool cim = i >= sorted.size();
        runs[i] = point_of(run_controlled(s, sorted[i % sorted.size()], s.mode.residue, cim));
    });
    GainSweepResult out;
    out.plain = curve_from(sorted, {runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(sorted.size())});
    out.cim = curve_from(sorted, {runs.begin() + static_cast<std::ptrdiff_t>(sorted.size()), runs.end()});
    return out;
}

std::optional<double> performance_at_cost(const GainCurve& curve, double target_cost) {
    // Walk the valid points while cost keeps increasing; interpolate on the
    // first segment that brackets the target.
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < curve.cost.size(); ++i) {
        if (!curve.valid[i]) break;
        if (prev && !(curve.cost[i] > curve.cost[*prev])) break;
        if (curve.cost[i] == target_cost) return curve.performance[i];
        if (prev && curve.cost[*prev] < target_cost && target_cost < curve.cost[i]) {
            const double w = (target_cost - curve.cost[*prev]) / (curve.cost[i] - curve.cost[*prev]);
            return curve.performance[*prev] + w * (curve.performance[i] - curve.performance[*prev]);
        }
        prev = i;
    }
    return std::nullopt;
}

bool dominates(const GainCurve& curve, const GainCurve& other, double rel_tol) {
    for (std::size_t i = 0; i < other.cost.size(); ++i) {
        if (!other.valid[i]) continue;
        if (auto p = performance_at_cost(curve, other.cost[i])) {
            if (*p < other.performance[i] * (1.0 - rel_tol)) return false;
        }
    }
    for (std::size_t i = 0; i < curve.cost.size(); ++i) {
        if (!curve.valid[i]) continue;
        if (auto p = performance_at_cost(other, curve.cost[i])) {
            if (curve.performance[i] < *p * (1.0 - rel_tol)) return false;
        }
    }
    return true;
}

const SweepCell& SweepGrid::at(std::size_t scale_index, std::size_t angle_index) const {
    return cells.at(scale_index * angles_deg.size() + angle_index);
}

std::vector<double> default_scales(std::size_t n) {
    if (n < 1) throw std::invalid_argument("need at least one scale");
    if (n == 1) return {1.0};
    std::vector<double> v;
    const double last = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v.push_back(0.5 * std::pow(4.0, static_cast<double>(i) / last));
    if (n % 2 == 1) v[n / 2] = 1.0;
    return v;
}

std::vector<double> default_angles_deg(std::size_t n) {
    if (n < 1) throw std::invalid_argument("need at least one angle");
    if (n == 1) return {0.0};
    std::vector<double> v;
    const double last = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v.push_back(-60.0 + 120.0 * static_cast<double>(i) / last);
    if (n % 2 == 1) v[n / 2] = 0.0;
    return v;
}

std::vector<double> default_sweep_gains() {
    return {0.0, 5.0, 10.0, 15.0, 20.0, 28.0, 40.0, 55.0, 70.0, 85.0, 100.0, 125.0, 150.0,
            200.0, 250.0, 300.0, 400.0, 500.0, 650.0, 800.0, 1000.0};
}

SweepGrid residue_sweep(const StudySetup& s, const std::vector<double>& scales,
                        const std::vector<double>& angles_deg, const std::vector<double>& gains,
                        double target_cost, std::size_t workers) {
    SweepGrid grid;
    grid.scales = scales;
    grid.angles_deg = angles_deg;
    grid.gains = gains;
    std::sort(grid.gains.begin(), grid.gains.end());
    grid.target_cost = target_cost;
    grid.exact_residue = s.mode.residue;

    const std::size_t ns = scales.size();
    const std::size_t na = angles_deg.size();
    const std::size_t ng = grid.gains.size();

    // The plain filter only sees the phase of the test residue, so it is run
    // once per angle; the CIM filter is run for every cell.
    std::vector<RunPoint> plain(na * ng);
    std::vector<RunPoint> cim(ns * na * ng);
    parallel_for(plain.size() + cim.size(), workers, [&](std::size_t job) {
        if (job < plain.size()) {
            const std::size_t a = job / ng;
            const std::size_t g = job % ng;
            plain[job] = point_of(run_controlled(s, grid.gains[g], rotate(s.mode.residue, 1.0, angles_deg[a]), false));
            return;
        }
        const std::size_t j = job - plain.size();
        const std::size_t cell = j / ng;
        const std::size_t g = j % ng;
        const auto r = rotate(s.mode.residue, scales[cell / na], angles_deg[cell % na]);
        cim[j] = point_of(run_controlled(s, grid.gains[g], r, true));
    });

    auto slice = [&](const std::vector<RunPoint>& v, std::size_t block) {
        return std::vector<RunPoint>(v.begin() + static_cast<std::ptrdiff_t>(block * ng),
                                             v.begin() + static_cast<std::ptrdiff_t>((block + 1) * ng));
    };
    std::vector<std::optional<double>> plain_perf(na);
    for (std::size_t a = 0; a < na; ++a) {
        plain_perf[a] = performance_at_cost(curve_from(grid.gains, slice(plain, a)), target_cost);
    }
    for (std::size_t si = 0; si < ns; ++si) {
        for (std::size_t a = 0; a < na; ++a) {
            SweepCell c;
            c.scale = scales[si];
            c.angle_deg = angles_deg[a];
            c.performance_plain = plain_perf[a];
            c.performance_cim = performance_at_cost(curve_from(grid.gains, slice(cim, si * na + a)), target_cost);
            if (c.performance_plain && c.performance_cim) {
                c.advantage_pct = (*c.performance_cim - *c.performance_plain) / *c.performance_cim * 100.0;
            }
            grid.cells.push_back(c);
        }
    }
    return grid;
}

}  // namespace podlab::harness

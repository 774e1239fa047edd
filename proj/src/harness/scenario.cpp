#include "podlab/harness/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "podlab/errors.hpp"
#include "podlab/grid/case_io.hpp"
#include "podlab/harness/studies.hpp"
#include "podlab/modal/modes.hpp"

namespace podlab::harness {

using nlohmann::json;

namespace {

const json& required(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ScenarioError(path + "." + key + ": required field missing");
    return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& path) {
    const auto& v = required(j, key, path);
    if (!v.is_number()) throw ScenarioError(path + "." + key + ": expected a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
    return j.contains(key) ? number(j, key, path) : fallback;
}

std::string text(const json& j, const std::string& key, const std::string& path) {
    const auto& v = required(j, key, path);
    if (!v.is_string()) throw ScenarioError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<std::string> names(const json& j, const std::string& key, const std::string& path) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ScenarioError(path + "." + key + ": expected an array of names");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw ScenarioError(path + "." + key + "[" + std::to_string(i) + "]: expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::size_t bus_of(const grid::CaseData& c, const std::string& name, const std::string& path) {
    if (auto b = c.network.find_bus(name)) return *b;
    throw ScenarioError(path + ": unknown bus '" + name + "'");
}

std::size_t branch_of(const grid::CaseData& c, const std::string& name, const std::string& path) {
    if (auto b = c.network.find_branch(name)) return *b;
    throw ScenarioError(path + ": unknown branch '" + name + "'");
}

std::size_t machine_of(const grid::CaseData& c, const std::string& name, const std::string& path) {
    if (auto m = c.find_machine(name)) return *m;
    throw ScenarioError(path + ": unknown machine '" + name + "'");
}

std::filesystem::path resolve_case(const std::string& name, const std::filesystem::path& base_dir) {
    const std::filesystem::path p(name);
    if (p.is_absolute()) return p;
    if (std::filesystem::exists(base_dir / p)) return base_dir / p;
    return default_data_dir() / p;
}

grid::Channel parse_measurement(const json& j, const grid::CaseData& c, const std::string& path) {
    grid::Channel ch;
    const auto kind = text(j, "kind", path);
    const auto target = text(j, "target", path);
    ch.label = kind + "_" + target;
    if (kind == "speed") {
        ch.kind = grid::Channel::Kind::MachineSpeed;
        ch.index = machine_of(c, target, path + ".target");
    } else if (kind == "branch_power") {
        ch.kind = grid::Channel::Kind::BranchActivePower;
        ch.index = branch_of(c, target, path + ".target");
        const auto end = j.value("end", std::string("from"));
        if (end != "from" && end != "to") throw ScenarioError(path + ".end: expected 'from' or 'to'");
        ch.from_end = end == "from";
    } else if (kind == "voltage") {
        ch.kind = grid::Channel::Kind::BusVoltageMagnitude;
        ch.index = bus_of(c, target, path + ".target");
    } else {
        throw ScenarioError(path + ".kind: expected speed, branch_power or voltage");
    }
    return ch;
}

grid::Event parse_event(const json& j, const grid::CaseData& c, const std::string& path) {
    grid::Event e;
    const auto kind = text(j, "kind", path);
    e.t = number(j, "t", path);
    if (kind == "fault") {
        e.kind = grid::Event::Kind::BusFault;
        e.target = bus_of(c, text(j, "bus", path), path + ".bus");
        if (j.contains("t_clear")) {
            e.t_clear = number(j, "t_clear", path);
        } else {
            e.t_clear = e.t + number(j, "duration", path);
        }
        if (!(e.t_clear > e.t)) throw ScenarioError(path + ": fault must clear after it starts");
        if (j.contains("r") || j.contains("x")) {
            const grid::Complex z{number_or(j, "r", 0.0, path), number_or(j, "x", 0.0, path)};
            if (std::abs(z) == 0.0) throw ScenarioError(path + ": fault impedance must be non-zero");
            e.admittance = 1.0 / z;
        }
    } else if (kind == "trip") {
        e.kind = grid::Event::Kind::BranchTrip;
        e.target = branch_of(c, text(j, "branch", path), path + ".branch");
    } else if (kind == "toggle") {
        e.kind = grid::Event::Kind::ControllerToggle;
        e.controller = text(j, "controller", path);
        const auto& en = required(j, "enabled", path);
        if (!en.is_boolean()) throw ScenarioError(path + ".enabled: expected true or false");
        e.enabled = en.get<bool>();
        if (e.controller == "pss") {
            e.target = machine_of(c, text(j, "machine", path), path + ".machine");
            if (!c.machines[e.target].pss) throw ScenarioError(path + ".machine: machine has no stabilizer");
        } else if (e.controller != "pod") {
            throw ScenarioError(path + ".controller: expected 'pss' or 'pod'");
        }
    } else {
        throw ScenarioError(path + ".kind: expected fault, trip or toggle");
    }
    return e;
}

ControllerSettings parse_controller(const json& j, const std::string& path) {
    ControllerSettings s;
    const auto est = j.value("estimator", std::string("kf"));
    if (est == "kf") {
        s.estimator = pod::EstimatorKind::Kalman;
    } else if (est == "lpf") {
        s.estimator = pod::EstimatorKind::Lpf;
    } else {
        throw ScenarioError(path + ".estimator: expected 'kf' or 'lpf'");
    }
    if (j.contains("f")) s.frequency_hz = number(j, "f", path);
    s.gain = number(j, "gain", path);
    if (j.contains("beta_deg")) s.beta_deg = number(j, "beta_deg", path);
    if (j.contains("residue")) {
        const auto& r = j.at("residue");
        if (r.is_null()) {
            s.use_residue = false;
        } else if (r.is_array() && r.size() == 2 && r[0].is_number() && r[1].is_number()) {
            s.residue = std::complex<double>(r[0].get<double>(), r[1].get<double>());
        } else {
            throw ScenarioError(path + ".residue: expected [U, V] or null");
        }
    }
    s.k_c = number_or(j, "k_c", s.k_c, path);
    if (j.contains("limits")) {
        const auto& l = j.at("limits");
        if (!l.is_array() || l.size() != 2 || !l[0].is_number() || !l[1].is_number()) {
            throw ScenarioError(path + ".limits: expected [min, max]");
        }
        s.limits = std::make_pair(l[0].get<double>(), l[1].get<double>());
    }
    return s;
}

}  // namespace

Scenario parse_scenario(const json& j, const std::filesystem::path& base_dir) {
    const std::string root = "scenario";
    if (!j.is_object()) throw ScenarioError(root + ": expected an object");
    Scenario s;
    s.case_file = resolve_case(text(j, "case", root), base_dir);
    s.case_data = grid::load_case(s.case_file);
    auto& c = s.case_data;

    for (const auto& name : names(j, "outages", root)) {
        c.network.branches[branch_of(c, name, root + ".outages")].in_service = false;
    }
    for (const auto& name : names(j, "pss_disabled", root)) {
        auto& m = c.machines[machine_of(c, name, root + ".pss_disabled")];
        if (!m.pss) throw ScenarioError(root + ".pss_disabled: machine '" + name + "' has no stabilizer");
        m.pss->enabled = false;
    }

    s.options.t_end = number_or(j, "t_end", s.options.t_end, root);
    s.options.dt = number_or(j, "dt", s.options.dt, root);
    s.options.controller_period = number_or(j, "controller_period", s.options.controller_period, root);
    if (!(s.options.dt > 0.0)) throw ScenarioError(root + ".dt: must be positive");
    if (!(s.options.controller_period >= s.options.dt)) {
        throw ScenarioError(root + ".controller_period: must be at least dt");
    }
    if (!(s.options.t_end > 0.0)) throw ScenarioError(root + ".t_end: must be positive");

    s.measurement = parse_measurement(required(j, "measurement", root), c, root + ".measurement");

    if (c.tcscs.empty()) throw ScenarioError(root + ": case has no TCSC to actuate");
    if (j.contains("actuator")) {
        const auto name = text(j, "actuator", root);
        const auto t = c.find_tcsc(name);
        if (!t) throw ScenarioError(root + ".actuator: unknown TCSC '" + name + "'");
        s.actuator = *t;
    }

    if (j.contains("events")) {
        const auto& ev = j.at("events");
        if (!ev.is_array()) throw ScenarioError(root + ".events: expected an array");
        double latest = 0.0;
        for (std::size_t i = 0; i < ev.size(); ++i) {
            const auto path = root + ".events[" + std::to_string(i) + "]";
            auto e = parse_event(ev[i], c, path);
            latest = std::max(latest, e.t);
            if (std::isfinite(e.t_clear)) latest = std::max(latest, e.t_clear);
            s.events.push_back(e);
        }
        if (!(s.options.t_end > latest)) {
            throw ScenarioError(root + ".t_end: must exceed the latest event time");
        }
    }

    if (j.contains("controller") && !j.at("controller").is_null()) {
        s.controller = parse_controller(j.at("controller"), root + ".controller");
    }
    if (j.contains("output")) {
        s.output = text(j, "output", root);
        if (s.output.is_relative()) s.output = base_dir / s.output;
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    const json j = grid::read_json_file(path);
    try {
        return parse_scenario(j, path.parent_path());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    } catch (const json::exception& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

pod::PodConfig resolve_controller(const ControllerSettings& settings, const grid::PowerSystem& ps,
                                  const grid::Channel& measurement, std::size_t actuator,
                                  const grid::SimulationOptions& options) {
    const bool need_modes = !settings.frequency_hz || !settings.beta_deg || (settings.use_residue && !settings.residue);
    std::optional<modal::ModeInfo> mode;
    if (need_modes) {
        const auto modes = modal::screen_modes(modal::analyze(modal::linearize(ps, measurement, actuator)), 0.1, 3.0, 1);
        if (modes.empty()) throw ModelError("no electromechanical mode in the 0.1-3 Hz band");
        mode = modes.front();
    }
    pod::PodConfig c;
    c.estimator = settings.estimator;
    c.omega = settings.frequency_hz ? 2.0 * std::numbers::pi * *settings.frequency_hz : mode->lambda.imag();
    c.period = options.controller_period;
    c.k_c = settings.k_c;
    c.gain = settings.gain;
    if (settings.use_residue) c.residue = settings.residue ? *settings.residue : mode->residue;
    c.beta_deg = settings.beta_deg ? *settings.beta_deg : modal::phase_compensation(c.residue ? *c.residue : mode->residue);
    if (settings.limits) {
        c.u_min = settings.limits->first;
        c.u_max = settings.limits->second;
    } else {
        const auto& t = ps.data().tcscs.at(actuator);
        c.u_min = t.kmin - t.x_ref;
        c.u_max = t.kmax - t.x_ref;
    }
    c.validate();
    return c;
}

}  // namespace podlab::harness

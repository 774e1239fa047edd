#include "podlab/grid/case_io.hpp"

#include <fstream>
#include <sstream>

#include "podlab/errors.hpp"

namespace podlab::grid {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        throw ScenarioError(path + "." + key + ": required field missing");
    }
    return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_number()) throw ScenarioError(path + "." + key + ": expected a number");
    return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    return number(j, key, path);
}

std::string text(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_string()) throw ScenarioError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

const json& array(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_array()) throw ScenarioError(path + "." + key + ": expected an array");
    return v;
}

std::size_t bus_ref(const NetworkModel& net, const json& j, const std::string& key, const std::string& path) {
    const auto name = text(j, key, path);
    if (auto b = net.find_bus(name)) return *b;
    throw ScenarioError(path + "." + key + ": unknown bus '" + name + "'");
}

MachineParams parse_machine_params(const json& j, const std::string& path) {
    MachineParams p;
    p.h = number(j, "H", path);
    p.d = number_or(j, "D", 0.0, path);
    p.xd = number(j, "Xd", path);
    p.xq = number(j, "Xq", path);
    p.xd_t = number(j, "Xd_t", path);
    p.xq_t = number(j, "Xq_t", path);
    p.xd_st = number(j, "Xd_st", path);
    p.xq_st = number(j, "Xq_st", path);
    p.td0_t = number(j, "Td0_t", path);
    p.tq0_t = number(j, "Tq0_t", path);
    p.td0_st = number(j, "Td0_st", path);
    p.tq0_st = number(j, "Tq0_st", path);
    for (double v : {p.h, p.td0_t, p.tq0_t, p.td0_st, p.tq0_st, p.xd_st}) {
        if (!(v > 0.0)) throw ScenarioError(path + ": inertia, time constants and X''d must be positive");
    }
    return p;
}

SexsParams parse_sexs(const json& j, const std::string& path) {
    SexsParams p;
    p.ta_tb = number_or(j, "TA_TB", p.ta_tb, path);
    p.tb = number_or(j, "TB", p.tb, path);
    p.k = number_or(j, "K", p.k, path);
    p.te = number_or(j, "TE", p.te, path);
    p.efd_min = number_or(j, "Efd_min", p.efd_min, path);
    p.efd_max = number_or(j, "Efd_max", p.efd_max, path);
    if (!(p.tb > 0.0 && p.te > 0.0 && p.k > 0.0)) throw ScenarioError(path + ": TB, TE and K must be positive");
    return p;
}

PssParams parse_pss(const json& j, const std::string& path) {
    PssParams p;
    p.k = number_or(j, "K", p.k, path);
    p.tw = number_or(j, "Tw", p.tw, path);
    p.t1 = number_or(j, "T1", p.t1, path);
    p.t2 = number_or(j, "T2", p.t2, path);
    p.vmax = number_or(j, "Vmax", p.vmax, path);
    if (j.contains("enabled")) p.enabled = j.at("enabled").get<bool>();
    if (!(p.tw > 0.0 && p.t2 > 0.0)) throw ScenarioError(path + ": Tw and T2 must be positive");
    return p;
}

GovernorParams parse_governor(const json& j, const std::string& path) {
    GovernorParams p;
    p.r = number_or(j, "R", p.r, path);
    p.tg = number_or(j, "Tg", p.tg, path);
    if (!(p.r > 0.0 && p.tg > 0.0)) throw ScenarioError(path + ": R and Tg must be positive");
    return p;
}

}  // namespace

CaseData parse_case(const json& j) {
    const std::string root = "case";
    CaseData c;
    c.name = j.value("name", "");
    c.s_base = number_or(j, "s_base", 100.0, root);
    c.f_base = number_or(j, "f_base", 60.0, root);

    auto& net = c.network;
    const auto& buses = array(j, "buses", root);
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto path = root + ".buses[" + std::to_string(i) + "]";
        net.buses.push_back({text(buses[i], "name", path), number_or(buses[i], "base_kv", 0.0, path)});
    }
    if (net.buses.empty()) throw ScenarioError(root + ".buses: at least one bus required");

    const auto& branches = array(j, "branches", root);
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const auto& b = branches[i];
        const auto path = root + ".branches[" + std::to_string(i) + "]";
        Branch br;
        br.name = text(b, "name", path);
        br.from = bus_ref(net, b, "from", path);
        br.to = bus_ref(net, b, "to", path);
        br.z = {number_or(b, "r", 0.0, path), number(b, "x", path)};
        br.b = number_or(b, "b", 0.0, path);
        br.ratio = number_or(b, "ratio", 1.0, path);
        br.in_service = b.value("in_service", true);
        if (std::abs(br.z) == 0.0) throw ScenarioError(path + ": zero series impedance");
        if (!(br.ratio > 0.0)) throw ScenarioError(path + ".ratio: must be positive");
        net.branches.push_back(br);
    }

    if (j.contains("loads")) {
        const auto& loads = array(j, "loads", root);
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const auto path = root + ".loads[" + std::to_string(i) + "]";
            net.loads.push_back({bus_ref(net, loads[i], "bus", path), number(loads[i], "p", path),
                                 number(loads[i], "q", path)});
        }
    }

    const auto& machines = array(j, "machines", root);
    for (std::size_t i = 0; i < machines.size(); ++i) {
        const auto& m = machines[i];
        const auto path = root + ".machines[" + std::to_string(i) + "]";
        MachineData md;
        md.name = text(m, "name", path);
        md.bus = bus_ref(net, m, "bus", path);
        md.p_set = number_or(m, "p", 0.0, path);
        md.v_set = number_or(m, "v", 1.0, path);
        md.params = parse_machine_params(field(m, "params", path), path + ".params");
        if (m.contains("avr") && !m.at("avr").is_null()) md.avr = parse_sexs(m.at("avr"), path + ".avr");
        if (m.contains("pss") && !m.at("pss").is_null()) md.pss = parse_pss(m.at("pss"), path + ".pss");
        if (m.contains("governor") && !m.at("governor").is_null()) {
            md.governor = parse_governor(m.at("governor"), path + ".governor");
        }
        c.machines.push_back(std::move(md));
    }

    if (j.contains("tcscs")) {
        const auto& tcscs = array(j, "tcscs", root);
        for (std::size_t i = 0; i < tcscs.size(); ++i) {
            const auto& t = tcscs[i];
            const auto path = root + ".tcscs[" + std::to_string(i) + "]";
            TcscParams p;
            p.name = text(t, "name", path);
            const auto br = text(t, "branch", path);
            const auto bi = net.find_branch(br);
            if (!bi) throw ScenarioError(path + ".branch: unknown branch '" + br + "'");
            p.branch = *bi;
            p.x_ref = number_or(t, "x_ref", p.x_ref, path);
            p.t = number_or(t, "T", p.t, path);
            p.kmin = number_or(t, "min", p.kmin, path);
            p.kmax = number_or(t, "max", p.kmax, path);
            if (!(p.t > 0.0) || p.kmin > p.kmax || p.x_ref < p.kmin || p.x_ref > p.kmax) {
                throw ScenarioError(path + ": need T > 0 and min <= x_ref <= max");
            }
            c.tcscs.push_back(p);
        }
    }

    const auto& slack = field(j, "slack", root);
    c.slack.bus = bus_ref(net, slack, "bus", root + ".slack");
    c.slack.v = number_or(slack, "v", 1.0, root + ".slack");
    c.slack.angle_deg = number_or(slack, "angle_deg", 0.0, root + ".slack");
    c.slack.infinite = slack.value("infinite", false);

    if (j.contains("preset_voltages")) {
        const auto& pv = array(j, "preset_voltages", root);
        if (pv.size() != net.buses.size()) {
            throw ScenarioError(root + ".preset_voltages: expected one entry per bus");
        }
        CVector v(static_cast<Eigen::Index>(pv.size()));
        for (std::size_t i = 0; i < pv.size(); ++i) {
            if (!pv[i].is_array() || pv[i].size() != 2) {
                throw ScenarioError(root + ".preset_voltages[" + std::to_string(i) + "]: expected [re, im]");
            }
            v(static_cast<Eigen::Index>(i)) = {pv[i][0].get<double>(), pv[i][1].get<double>()};
        }
        c.preset_voltages = v;
    }
    return c;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

CaseData load_case(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    try {
        return parse_case(j);
    } catch (const ScenarioError& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    } catch (const json::exception& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

}  // namespace podlab::grid

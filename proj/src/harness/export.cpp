#include "podlab/harness/export.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "podlab/errors.hpp"

namespace podlab::harness {

using nlohmann::json;

namespace {

constexpr int kDigits = 17;

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

void write_series_csv(std::ostream& os, const ExperimentResult& r) {
    os << std::setprecision(kDigits);
    os << "t,y,u";
    for (const auto& name : r.machine_names) os << ",dw_" << name;
    os << '\n';
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        os << r.t[k] << ',' << r.y[k] << ',' << r.u[k];
        for (const auto& s : r.speeds) os << ',' << s[k];
        os << '\n';
    }
}

void write_ticks_csv(std::ostream& os, const ExperimentResult& r) {
    os << std::setprecision(kDigits);
    os << "t,y,average,d,q,innovation,u\n";
    for (const auto& k : r.ticks) {
        os << k.t << ',' << k.y << ',' << k.average << ',' << k.d << ',' << k.q << ',' << k.innovation << ','
           << k.u << '\n';
    }
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return columns[i];
    }
    throw std::out_of_range("no column '" + name + "'");
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw ScenarioError("csv line 1: missing header");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.resize(t.header.size());
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= t.header.size()) throw ScenarioError("csv line " + std::to_string(line_no) + ": too many fields");
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size()) {
                throw ScenarioError("csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            t.columns[col++].push_back(v);
        }
        if (col != t.header.size()) throw ScenarioError("csv line " + std::to_string(line_no) + ": too few fields");
    }
    return t;
}

CostPerformance metrics_from_csv(const CsvTable& series, const CsvTable& ticks) {
    std::vector<std::vector<double>> dx;
    for (std::size_t i = 0; i < series.header.size(); ++i) {
        if (series.header[i].rfind("dw_", 0) == 0) dx.push_back(series.columns[i]);
    }
    const std::vector<double> u = ticks.header.empty() ? std::vector<double>{} : ticks.column("u");
    return cost_performance(u, dx);
}

json summary_json(const ExperimentResult& r) {
    json j;
    j["label"] = r.label;
    j["gain"] = r.gain;
    if (r.residue) {
        j["residue"] = {r.residue->real(), r.residue->imag()};
    } else {
        j["residue"] = nullptr;
    }
    if (r.estimator) {
        j["estimator"] = *r.estimator == pod::EstimatorKind::Kalman ? "kf" : "lpf";
    } else {
        j["estimator"] = nullptr;
    }
    j["cost"] = r.metrics.cost;
    j["performance"] = finite_or_null(r.metrics.performance);
    j["performance_infinite"] = r.metrics.performance_infinite;
    j["samples"] = r.t.size();
    j["ticks"] = r.ticks.size();
    j["diverged"] = r.diverged;
    j["error"] = r.error;
    json w = json::array();
    for (const auto& x : r.warnings) w.push_back({{"step", x.step}, {"message", x.message}});
    j["warnings"] = w;
    return j;
}

json modes_json(const std::vector<modal::ModeInfo>& modes) {
    json out = json::array();
    for (const auto& m : modes) {
        json j;
        j["re"] = m.lambda.real();
        j["im"] = m.lambda.imag();
        j["f_hz"] = m.frequency_hz;
        j["zeta"] = m.damping_ratio;
        j["residue"] = {m.residue.real(), m.residue.imag()};
        j["residue_abs"] = std::abs(m.residue);
        j["residue_arg_deg"] = std::arg(m.residue) * 180.0 / M_PI;
        j["beta_deg"] = std::abs(m.residue) > 0.0 ? json(modal::phase_compensation(m.residue)) : json(nullptr);
        j["condition"] = m.condition;
        if (!m.warning.empty()) j["warning"] = m.warning;
        out.push_back(j);
    }
    return out;
}

json gain_sweep_json(const GainSweepResult& s) {
    auto curve = [](const GainCurve& c) {
        json j = json::array();
        for (std::size_t i = 0; i < c.gains.size(); ++i) {
            j.push_back({{"gain", c.gains[i]},
                         {"cost", c.cost[i]},
                         {"performance", finite_or_null(c.performance[i])},
                         {"valid", static_cast<bool>(c.valid[i])}});
        }
        return j;
    };
    return {{"plain", curve(s.plain)}, {"cim", curve(s.cim)}};
}

json sweep_grid_json(const SweepGrid& g) {
    json j;
    j["scales"] = g.scales;
    j["angles_deg"] = g.angles_deg;
    j["gains"] = g.gains;
    j["target_cost"] = g.target_cost;
    j["exact_residue"] = {g.exact_residue.real(), g.exact_residue.imag()};
    json cells = json::array();
    for (const auto& c : g.cells) {
        cells.push_back({{"scale", c.scale},
                         {"angle_deg", c.angle_deg},
                         {"performance_plain", optional_number(c.performance_plain)},
                         {"performance_cim", optional_number(c.performance_cim)},
                         {"advantage_pct", optional_number(c.advantage_pct)}});
    }
    j["cells"] = cells;
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw ExportError("cannot open '" + path.string() + "' for writing");
    os << content;
    os.flush();
    if (!os) throw ExportError("failed writing '" + path.string() + "'");
}

void export_result(const ExperimentResult& r, const std::filesystem::path& dir, const std::string& stem) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ExportError("cannot create '" + dir.string() + "': " + ec.message());
    std::ostringstream series;
    write_series_csv(series, r);
    write_text(dir / (stem + "_series.csv"), series.str());
    std::ostringstream ticks;
    write_ticks_csv(ticks, r);
    write_text(dir / (stem + "_ticks.csv"), ticks.str());
    write_text(dir / (stem + ".json"), summary_json(r).dump(2) + "\n");
}

}  // namespace podlab::harness

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "podlab/errors.hpp"
#include "podlab/grid/case_io.hpp"
#include "podlab/harness/experiment.hpp"
#include "podlab/harness/export.hpp"
#include "podlab/harness/scenario.hpp"
#include "podlab/harness/studies.hpp"
#include "support.hpp"

using namespace podlab;
using namespace podlab::harness;
using nlohmann::json;

namespace {

const StudySetup& smib() {
    static const auto s = make_smib_setup();
    return s;
}

json smib_scenario() {
    return json::parse(R"({
      "case": "smib.json",
      "t_end": 5.0,
      "measurement": {"kind": "speed", "target": "G1"},
      "actuator": "TCSC1",
      "events": [{"kind": "fault", "bus": "B1", "t": 1.0, "duration": 0.05}],
      "controller": {"estimator": "kf", "gain": 15.0, "k_c": 0.18}
    })");
}

std::string parse_error(const json& j) {
    try {
        parse_scenario(j, default_data_dir());
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return {};
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("podlab_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("cost and performance arithmetic") {
    CHECK(cost_performance({0.0, 0.0}, {{1.0}}).cost == 0.0);
    CHECK(cost_performance({3.0, 4.0}, {{1.0}}).cost == testing::approx(5.0));
    CHECK(cost_performance({}, {{3.0, 4.0}}).performance == testing::approx(0.2));
    CHECK(cost_performance({}, {{3.0}, {4.0}}).performance == testing::approx(0.2));
    const auto quiet = cost_performance({}, {{0.0, 0.0}});
    CHECK(quiet.performance_infinite);
    CHECK(std::isinf(quiet.performance));
}

TEST_CASE("zero gain leaves both controllers identical") {
    const auto& s = smib();
    const auto plain = run_controlled(s, 0.0, s.mode.residue, false);
    const auto cim = run_controlled(s, 0.0, s.mode.residue, true);
    const auto open = run_uncontrolled(s);
    CHECK(plain.metrics.cost == 0.0);
    CHECK(cim.metrics.cost == 0.0);
    CHECK(plain.speeds == cim.speeds);
    CHECK(plain.speeds == open.speeds);
    // Without control the oscillation persists; after the bolted fault it
    // settles into an exciter-limited limit cycle rather than growing.
    const auto& w = open.speeds[0];
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (open.t[k] > 5.0 && open.t[k] < 7.0) early = std::max(early, std::abs(w[k]));
        if (open.t[k] > 18.0) late = std::max(late, std::abs(w[k]));
    }
    CHECK(late > 0.5 * early);
}

TEST_CASE("P-POD-CIM at gain 100 damps the SMIB oscillation") {
    const auto& s = smib();
    const auto r = run_controlled(s, 100.0, s.mode.residue, true);
    const auto& w = r.speeds[0];
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (r.t[k] > 1.0 && r.t[k] < 4.0) early = std::max(early, std::abs(w[k]));
        if (r.t[k] > 17.0) late = std::max(late, std::abs(w[k]));
    }
    CHECK(late < 0.1 * early);
}

TEST_CASE("runs are deterministic") {
    const auto& s = smib();
    const auto a = run_controlled(s, 15.0, s.mode.residue, true);
    const auto b = run_controlled(s, 15.0, s.mode.residue, true);
    CHECK(a.y == b.y);
    CHECK(a.u == b.u);
    CHECK(a.metrics.cost == b.metrics.cost);
    CHECK(a.metrics.performance == b.metrics.performance);
}

TEST_CASE("tick costs match the held modulation") {
    const auto& s = smib();
    const auto r = run_controlled(s, 15.0, s.mode.residue, true);
    REQUIRE(r.u_ticks.size() == r.ticks.size());
    for (std::size_t i = 0; i < r.ticks.size(); ++i) CHECK(r.u_ticks[i] == r.ticks[i].u);
}

TEST_CASE("CSV export round-trips and reproduces the metrics") {
    const auto& s = smib();
    const auto r = run_controlled(s, 28.0, s.mode.residue, false, "smib_plain");
    std::stringstream series, ticks;
    write_series_csv(series, r);
    write_ticks_csv(ticks, r);
    const auto ts = read_csv(series);
    const auto tt = read_csv(ticks);
    REQUIRE(ts.rows() == r.t.size());
    CHECK(ts.header[3] == "dw_G1");
    double worst = 0.0;
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        worst = std::max({worst, std::abs(ts.column("t")[k] - r.t[k]), std::abs(ts.column("y")[k] - r.y[k]),
                          std::abs(ts.column("u")[k] - r.u[k]), std::abs(ts.column("dw_G1")[k] - r.speeds[0][k])});
    }
    CHECK(worst < 1e-12);
    const auto m = metrics_from_csv(ts, tt);
    CHECK(std::abs(m.cost - r.metrics.cost) < 1e-12);
    CHECK(std::abs(m.performance - r.metrics.performance) < 1e-12 * r.metrics.performance);
}

TEST_CASE("malformed CSV reports the line") {
    std::stringstream bad("t,y\n0,1\n0.5,x\n");
    try {
        read_csv(bad);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("export writes the three files and rejects unwritable paths") {
    const auto& s = smib();
    const auto r = run_controlled(s, 15.0, s.mode.residue, true, "run");
    const auto dir = scratch("export");
    export_result(r, dir, "run");
    CHECK(std::filesystem::exists(dir / "run_series.csv"));
    CHECK(std::filesystem::exists(dir / "run_ticks.csv"));
    std::ifstream js(dir / "run.json");
    const auto summary = json::parse(js);
    CHECK(summary["cost"].get<double>() == r.metrics.cost);
    CHECK(summary["estimator"] == "kf");

    std::ofstream(dir / "blocker") << "x";
    CHECK_THROWS_AS(export_result(r, dir / "blocker" / "sub", "run"), ExportError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("identical scenarios export identical bytes") {
    auto once = [](const std::string& tag) {
        const auto sc = parse_scenario(smib_scenario(), default_data_dir());
        const auto ps = grid::PowerSystem::initialize(sc.case_data);
        const auto cfg = resolve_controller(*sc.controller, ps, sc.measurement, sc.actuator, sc.options);
        const auto r = run_experiment(ps, sc.events, sc.measurement, sc.actuator, cfg, sc.options, "det");
        const auto dir = scratch(tag);
        export_result(r, dir, "det");
        std::stringstream all;
        for (const auto* f : {"det_series.csv", "det_ticks.csv", "det.json"}) all << std::ifstream(dir / f).rdbuf();
        std::filesystem::remove_all(dir);
        return all.str();
    };
    CHECK(once("det_a") == once("det_b"));
}

TEST_CASE("scenario resolves the controller from modal analysis") {
    const auto sc = parse_scenario(smib_scenario(), default_data_dir());
    const auto ps = grid::PowerSystem::initialize(sc.case_data);
    const auto cfg = resolve_controller(*sc.controller, ps, sc.measurement, sc.actuator, sc.options);
    CHECK(cfg.omega == testing::approx(smib().mode.lambda.imag()).epsilon(1e-9));
    REQUIRE(cfg.residue);
    CHECK(std::abs(*cfg.residue - smib().mode.residue) < 1e-9);
    CHECK(cfg.beta_deg == testing::approx(modal::phase_compensation(smib().mode.residue)));
    CHECK(cfg.u_max == testing::approx(0.4));

    auto j = smib_scenario();
    j["controller"]["residue"] = nullptr;
    j["controller"]["beta_deg"] = 10.0;
    const auto sc2 = parse_scenario(j, default_data_dir());
    const auto cfg2 = resolve_controller(*sc2.controller, ps, sc2.measurement, sc2.actuator, sc2.options);
    CHECK(!cfg2.residue);
    CHECK(cfg2.beta_deg == 10.0);
}

TEST_CASE("scenario errors name the field") {
    auto j = smib_scenario();
    j["measurement"]["target"] = "G9";
    CHECK(parse_error(j).find("scenario.measurement.target") != std::string::npos);

    j = smib_scenario();
    j["events"][0]["bus"] = "B7";
    CHECK(parse_error(j).find("scenario.events[0].bus") != std::string::npos);

    j = smib_scenario();
    j["t_end"] = 1.0;
    CHECK(parse_error(j).find("scenario.t_end") != std::string::npos);

    j = smib_scenario();
    j.erase("measurement");
    CHECK(parse_error(j).find("scenario.measurement") != std::string::npos);

    j = smib_scenario();
    j["controller"]["estimator"] = "rls";
    CHECK(parse_error(j).find("scenario.controller.estimator") != std::string::npos);

    j = smib_scenario();
    j["actuator"] = "TCSC9";
    CHECK(parse_error(j).find("scenario.actuator") != std::string::npos);
}

TEST_CASE("scenario file syntax errors carry the line") {
    const auto dir = scratch("syntax");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{\n  \"case\": \"smib.json\",\n  \"t_end\": ,\n}\n";
    try {
        load_scenario(dir / "bad.json");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty event list runs and stays put") {
    auto j = smib_scenario();
    j["events"] = json::array();
    j.erase("controller");
    const auto sc = parse_scenario(j, default_data_dir());
    const auto ps = grid::PowerSystem::initialize(sc.case_data);
    const auto r = run_experiment(ps, sc.events, sc.measurement, sc.actuator, std::nullopt, sc.options, "quiet");
    CHECK(!r.diverged);
    CHECK(r.metrics.cost == 0.0);
    double drift = 0.0;
    for (double v : r.y) drift = std::max(drift, std::abs(v - r.y.front()));
    CHECK(drift < 1e-6);
}

TEST_CASE("performance at a cost interpolates along increasing cost") {
    GainCurve c;
    c.gains = {0, 1, 2, 3};
    c.cost = {0.0, 1.0, 2.0, 1.5};
    c.performance = {1.0, 3.0, 5.0, 9.0};
    c.valid = {true, true, true, true};
    CHECK(*performance_at_cost(c, 0.5) == testing::approx(2.0));
    CHECK(*performance_at_cost(c, 2.0) == testing::approx(5.0));
    CHECK(!performance_at_cost(c, 2.5));

    GainCurve better = c;
    better.cost = {0.0, 1.0, 2.0, 3.0};
    better.performance = {1.0, 3.5, 5.5, 6.0};
    GainCurve worse = better;
    worse.performance = {1.0, 3.0, 5.0, 5.5};
    CHECK(dominates(better, worse));
    CHECK(!dominates(worse, better));
}

TEST_CASE("gain sweep needs five gains and starts at zero cost") {
    const auto& s = smib();
    CHECK_THROWS_AS(gain_sweep(s, {0, 10, 20}, 1), std::invalid_argument);
    const auto sweep = gain_sweep(s, {0, 10, 20, 30, 40}, 2);
    CHECK(sweep.plain.cost[0] == 0.0);
    CHECK(sweep.cim.cost[0] == 0.0);
}

TEST_CASE("parallel and sequential sweeps agree") {
    const auto& s = smib();
    const std::vector<double> gains{0, 10, 20, 40, 80};
    const auto a = residue_sweep(s, {0.5, 1.0}, {-20.0, 0.0}, gains, 0.3, 1);
    const auto b = residue_sweep(s, {0.5, 1.0}, {-20.0, 0.0}, gains, 0.3, 3);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].performance_plain == b.cells[i].performance_plain);
        CHECK(a.cells[i].performance_cim == b.cells[i].performance_cim);
    }
    const auto ga = gain_sweep(s, gains, 1);
    const auto gb = gain_sweep(s, gains, 3);
    CHECK(ga.cim.performance == gb.cim.performance);
    CHECK(ga.plain.cost == gb.plain.cost);
}

TEST_CASE("residue sweep at zero error agrees with the gain sweep") {
    const auto& s = smib();
    const std::vector<double> gains{0, 10, 20, 40, 80};
    const double target = 0.3;
    const auto sweep = gain_sweep(s, gains, 2);
    const auto grid = residue_sweep(s, {1.0}, {0.0}, gains, target, 2);
    const auto& cell = grid.at(0, 0);
    REQUIRE(cell.performance_plain);
    REQUIRE(cell.performance_cim);
    CHECK(*cell.performance_plain == *performance_at_cost(sweep.plain, target));
    CHECK(*cell.performance_cim == *performance_at_cost(sweep.cim, target));
    CHECK(*cell.advantage_pct ==
          testing::approx((*cell.performance_cim - *cell.performance_plain) / *cell.performance_cim * 100.0));
}

TEST_CASE("unreachable target cost leaves the cell empty") {
    const auto grid = residue_sweep(smib(), {1.0}, {0.0}, {0, 1, 2, 3, 4}, 1e3, 1);
    CHECK(!grid.at(0, 0).performance_cim);
    CHECK(!grid.at(0, 0).advantage_pct);
}

TEST_CASE("default grid axes") {
    const auto scales = default_scales();
    REQUIRE(scales.size() == 7);
    CHECK(scales.front() == testing::approx(0.5));
    CHECK(scales.back() == testing::approx(2.0));
    CHECK(scales[3] == 1.0);
    const auto angles = default_angles_deg();
    REQUIRE(angles.size() == 13);
    CHECK(angles.front() == -60.0);
    CHECK(angles[6] == 0.0);
    CHECK(angles[5] == -10.0);
    CHECK(angles[10] == 40.0);
}

TEST_CASE("divergence is recorded in the result") {
    const auto& s = smib();
    auto opt = s.options;
    opt.dt = 0.2;
    opt.controller_period = 0.2;
    const auto r = run_experiment(s.system, s.events, s.measurement, s.actuator, std::nullopt, opt, "coarse");
    CHECK(r.diverged);
    CHECK(r.error.find("speed deviation") != std::string::npos);
}

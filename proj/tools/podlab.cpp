// Command-line entry points for the damping-controller studies.
//
// Exit status: 0 success, 2 bad scenario/case/arguments, 3 a run diverged,
// 1 anything else (I/O, model preconditions).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "podlab/errors.hpp"
#include "podlab/grid/case_io.hpp"
#include "podlab/harness/export.hpp"
#include "podlab/harness/scenario.hpp"
#include "podlab/harness/studies.hpp"
#include "podlab/modal/linear_model.hpp"
#include "podlab/modal/modes.hpp"

namespace fs = std::filesystem;
using namespace podlab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitScenario = 2;
constexpr int kExitDiverged = 3;

struct Diverged {
    std::string what;
};

harness::StudySetup named_setup(const std::string& name) {
    if (name == "smib") return harness::make_smib_setup();
    if (name == "ieee39") return harness::make_ieee39_setup();
    throw ScenarioError("unknown study case '" + name + "' (expected smib or ieee39)");
}

void check(const harness::ExperimentResult& r) {
    if (r.diverged) throw Diverged{r.label + ": " + r.error};
}

json pair_summary(const harness::StudyPair& p) {
    json j;
    j["plain"] = harness::summary_json(p.plain);
    j["cim"] = harness::summary_json(p.cim);
    const double cp = p.plain.metrics.cost, cc = p.cim.metrics.cost;
    const double pp = p.plain.metrics.performance, pc = p.cim.metrics.performance;
    j["cost_plain_over_cim_pct"] = cc > 0.0 ? json((cp - cc) / cc * 100.0) : json(nullptr);
    j["performance_plain_over_cim_pct"] = (pp - pc) / pc * 100.0;
    j["advantage_pct"] = (pc - pp) / pc * 100.0;
    return j;
}

void export_pair(const harness::StudyPair& p, const fs::path& out, const std::string& stem) {
    harness::export_result(p.plain, out, stem + "_plain");
    harness::export_result(p.cim, out, stem + "_cim");
    harness::write_text(out / (stem + "_summary.json"), pair_summary(p).dump(2) + "\n");
}

std::vector<double> gain_range(double max, double step) {
    if (!(step > 0.0) || !(max >= 0.0)) throw ScenarioError("--gain-max must be >= 0 and --gain-step > 0");
    std::vector<double> g;
    for (std::size_t i = 0;; ++i) {
        const double v = static_cast<double>(i) * step;
        if (v > max + 1e-9 * step) break;
        g.push_back(v);
    }
    return g;
}

int cmd_modes(const std::string& target, bool all, std::optional<std::string> speed_of) {
    grid::Channel ch;
    std::size_t actuator = 0;
    std::optional<grid::PowerSystem> ps;
    if (target == "smib" || target == "ieee39") {
        auto s = named_setup(target);
        ch = s.measurement;
        actuator = s.actuator;
        ps.emplace(std::move(s.system));
    } else {
        const json j = grid::read_json_file(target);
        if (j.is_object() && j.contains("case")) {
            auto sc = harness::load_scenario(target);
            ch = sc.measurement;
            actuator = sc.actuator;
            ps.emplace(grid::PowerSystem::initialize(sc.case_data));
        } else {
            const auto data = grid::parse_case(j);
            ch.kind = grid::Channel::Kind::MachineSpeed;
            ch.index = 0;
            if (speed_of) {
                const auto m = data.find_machine(*speed_of);
                if (!m) throw ScenarioError("unknown machine '" + *speed_of + "'");
                ch.index = *m;
            }
            ps.emplace(grid::PowerSystem::initialize(data));
        }
    }
    const auto lm = modal::linearize(*ps, ch, actuator);
    auto modes = modal::analyze(lm);
    if (!all) modes = modal::screen_modes(modes, 0.1, 3.0);
    modal::write_mode_table(std::cout, modes);
    for (const auto& m : modes) {
        if (!m.warning.empty()) std::cerr << "warning: mode " << m.index << ": " << m.warning << '\n';
    }
    return kExitOk;
}

int cmd_simulate(const std::string& path, std::optional<fs::path> out_flag) {
    auto sc = harness::load_scenario(path);
    const auto ps = grid::PowerSystem::initialize(sc.case_data);
    std::optional<pod::PodConfig> cfg;
    if (sc.controller) cfg = harness::resolve_controller(*sc.controller, ps, sc.measurement, sc.actuator, sc.options);
    const auto label = fs::path(path).stem().string();
    const auto r = harness::run_experiment(ps, sc.events, sc.measurement, sc.actuator, cfg, sc.options, label);
    const fs::path out = out_flag ? *out_flag : (sc.output.empty() ? fs::path("out") : sc.output);
    harness::export_result(r, out, label);
    std::cout << harness::summary_json(r).dump(2) << '\n';
    check(r);
    return kExitOk;
}

int cmd_smib_study(double g0, double gcim, const fs::path& out) {
    const auto s = harness::make_smib_setup();
    const auto p = harness::run_smib_study(s, g0, gcim);
    export_pair(p, out, "smib");
    std::cout << pair_summary(p).dump(2) << '\n';
    check(p.plain);
    check(p.cim);
    return kExitOk;
}

int cmd_ieee39_study(double gain, const fs::path& out) {
    const auto s = harness::make_ieee39_setup();
    const auto open = harness::run_uncontrolled(s);
    const auto p = harness::run_ieee39_study(s, gain);
    harness::export_result(open, out, "ieee39_open");
    export_pair(p, out, "ieee39");
    std::cout << pair_summary(p).dump(2) << '\n';
    check(p.plain);
    check(p.cim);
    return kExitOk;
}

int cmd_gain_sweep(const std::string& study, const std::vector<double>& gains, const fs::path& out,
                   std::size_t workers) {
    const auto s = named_setup(study);
    const auto sweep = harness::gain_sweep(s, gains, workers);
    const json j = harness::gain_sweep_json(sweep);
    fs::create_directories(out);
    harness::write_text(out / (study + "_gain_sweep.json"), j.dump(2) + "\n");
    std::ostringstream csv;
    csv.precision(17);
    csv << "gain,cost_plain,performance_plain,cost_cim,performance_cim\n";
    for (std::size_t i = 0; i < sweep.plain.gains.size(); ++i) {
        csv << sweep.plain.gains[i] << ',' << sweep.plain.cost[i] << ',' << sweep.plain.performance[i] << ','
            << sweep.cim.cost[i] << ',' << sweep.cim.performance[i] << '\n';
    }
    harness::write_text(out / (study + "_gain_sweep.csv"), csv.str());
    std::cout << csv.str();
    return kExitOk;
}

int cmd_residue_sweep(std::size_t n_scales, std::size_t n_angles, std::vector<double> gains,
                      std::optional<double> target_cost, const fs::path& out, std::size_t workers) {
    const auto s = harness::make_smib_setup();
    if (gains.empty()) gains = harness::default_sweep_gains();
    const double target = target_cost ? *target_cost
                                      : harness::run_controlled(s, 15.0, s.mode.residue, false).metrics.cost;
    const auto grid = harness::residue_sweep(s, harness::default_scales(n_scales),
                                             harness::default_angles_deg(n_angles), gains, target, workers);
    fs::create_directories(out);
    harness::write_text(out / "residue_sweep.json", harness::sweep_grid_json(grid).dump(2) + "\n");
    std::ostringstream csv;
    csv.precision(17);
    csv << "scale,angle_deg,performance_plain,performance_cim,advantage_pct\n";
    for (const auto& c : grid.cells) {
        csv << c.scale << ',' << c.angle_deg << ',';
        if (c.performance_plain) csv << *c.performance_plain;
        csv << ',';
        if (c.performance_cim) csv << *c.performance_cim;
        csv << ',';
        if (c.advantage_pct) csv << *c.advantage_pct;
        csv << '\n';
    }
    harness::write_text(out / "residue_sweep.csv", csv.str());
    std::cout << "target cost " << target << '\n' << csv.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phasor power-oscillation damping studies"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    std::size_t workers = harness::default_workers();
    app.add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    app.add_option("-j,--workers", workers, "parallel simulations (default from PODLAB_WORKERS)");

    std::string modes_target;
    bool modes_all = false;
    std::optional<std::string> speed_of;
    auto* modes = app.add_subcommand("modes", "eigenvalues, damping and residues of a case");
    modes->add_option("case", modes_target, "case or scenario file, or smib / ieee39")->required();
    modes->add_flag("--all", modes_all, "list every mode, not only 0.1-3 Hz");
    modes->add_option("--speed", speed_of, "machine whose speed is the output (bare case files)");

    std::string scenario;
    auto* simulate = app.add_subcommand("simulate", "run a scenario file and export its results");
    simulate->add_option("scenario", scenario)->required();

    std::vector<double> smib_gains{15.0, 15.0};
    auto* smib = app.add_subcommand("smib-study", "P-POD-0 vs P-POD-CIM on the SMIB case");
    smib->add_option("--gains", smib_gains, "gain without and with the control-input model")
        ->expected(2)
        ->capture_default_str();

    double ieee_gain = 20.0;
    auto* ieee = app.add_subcommand("ieee39-study", "P-POD-0 vs P-POD-CIM on the degraded 39-bus case");
    ieee->add_option("--gain", ieee_gain)->capture_default_str();

    std::string sweep_case = "smib";
    std::vector<double> sweep_gains;
    double gain_max = 100.0, gain_step = 5.0;
    auto* gsweep = app.add_subcommand("gain-sweep", "cost and performance over a range of gains");
    gsweep->add_option("--case", sweep_case)->check(CLI::IsMember({"smib", "ieee39"}))->capture_default_str();
    gsweep->add_option("--gains", sweep_gains, "explicit gain list (overrides the range)")->delimiter(',');
    gsweep->add_option("--gain-max", gain_max)->capture_default_str();
    gsweep->add_option("--gain-step", gain_step)->capture_default_str();

    std::size_t n_scales = 7, n_angles = 13;
    std::vector<double> grid_gains;
    std::optional<double> target_cost;
    auto* rsweep = app.add_subcommand("residue-sweep", "performance at fixed cost under residue errors");
    rsweep->add_option("--scales", n_scales, "number of residue scale factors in [0.5, 2]")->capture_default_str();
    rsweep->add_option("--angles", n_angles, "number of rotation angles in [-60, 60] deg")->capture_default_str();
    rsweep->add_option("--gains", grid_gains, "gain list for the per-cell cost curves")->delimiter(',');
    rsweep->add_option("--target-cost", target_cost, "cost at which performance is compared");

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out(out_dir);
        if (*modes) return cmd_modes(modes_target, modes_all, speed_of);
        if (*simulate) {
            std::optional<fs::path> out_flag;
            if (app.get_option("--out")->count() > 0) out_flag = out;
            return cmd_simulate(scenario, out_flag);
        }
        if (*smib) return cmd_smib_study(smib_gains[0], smib_gains[1], out);
        if (*ieee) return cmd_ieee39_study(ieee_gain, out);
        if (*gsweep) {
            const auto gains = sweep_gains.empty() ? gain_range(gain_max, gain_step) : sweep_gains;
            return cmd_gain_sweep(sweep_case, gains, out, workers);
        }
        if (*rsweep) return cmd_residue_sweep(n_scales, n_angles, grid_gains, target_cost, out, workers);
    } catch (const Diverged& d) {
        std::cerr << "diverged: " << d.what << '\n';
        return kExitDiverged;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << '\n';
        return kExitScenario;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitScenario;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}

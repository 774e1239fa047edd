#include "podlab/harness/experiment.hpp"

#include <cmath>
#include <limits>

#include "podlab/errors.hpp"

namespace podlab::harness {

CostPerformance cost_performance(const std::vector<double>& u_ticks,
                                 const std::vector<std::vector<double>>& dx) {
    CostPerformance out;
    double su = 0.0;
    for (double u : u_ticks) su += u * u;
    out.cost = std::sqrt(su);
    double sx = 0.0;
    for (const auto& ch : dx) {
        for (double v : ch) sx += v * v;
    }
    if (sx == 0.0) {
        out.performance = std::numeric_limits<double>::infinity();
        out.performance_infinite = true;
    } else {
        out.performance = 1.0 / std::sqrt(sx);
    }
    return out;
}

ExperimentResult run_experiment(const grid::PowerSystem& ps, const std::vector<grid::Event>& events,
                                const grid::Channel& measurement, std::size_t actuator,
                                const std::optional<pod::PodConfig>& controller,
                                const grid::SimulationOptions& opt, std::string label) {
    ExperimentResult res;
    res.label = std::move(label);
    for (const auto& m : ps.data().machines) res.machine_names.push_back(m.name);

    std::optional<pod::PodController> pod;
    grid::ControllerHook hook;
    if (controller) {
        res.gain = controller->gain;
        res.residue = controller->residue;
        res.estimator = controller->estimator;
        pod.emplace(*controller);
        hook = [&pod](double t, double y) { return pod->step(t, y); };
    }

    grid::SimulationOptions o = opt;
    o.record_states = false;
    try {
        auto raw = grid::run_simulation(ps, events, measurement, actuator, hook, o);
        res.t = std::move(raw.t);
        res.y = std::move(raw.y);
        res.u = std::move(raw.u);
        res.speeds = std::move(raw.speeds);
        res.warnings = std::move(raw.warnings);
        for (std::size_t k = 0; k < res.u.size(); k += raw.controller_stride) res.u_ticks.push_back(res.u[k]);
    } catch (const DivergenceError& e) {
        res.diverged = true;
        res.error = e.what();
    } catch (const NonFiniteDerivativeError& e) {
        res.diverged = true;
        res.error = e.what();
    } catch (const SingularNetworkError& e) {
        res.diverged = true;
        res.error = e.what();
    }
    if (pod) res.ticks = pod->log();
    if (!res.diverged) res.metrics = cost_performance(res.u_ticks, res.speeds);
    return res;
}

}  // namespace podlab::harness

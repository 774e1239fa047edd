#include "podlab/grid/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "podlab/errors.hpp"

namespace podlab::grid {

namespace {

double snap(double t, double dt) { return std::round(t / dt) * dt; }

// Clamp limited states (exciter output, TCSC compensation) back inside their
// bounds after an explicit update.
void clamp_limited(const PowerSystem& ps, Eigen::VectorXd& x) {
    const auto& data = ps.data();
    const auto& layout = ps.layout();
    for (std::size_t i = 0; i < data.machines.size(); ++i) {
        if (const auto& avr = data.machines[i].avr) {
            auto& e = x(static_cast<Eigen::Index>(layout.avr(i) + kSexsEfd));
            e = std::clamp(e, avr->efd_min, avr->efd_max);
        }
    }
    for (std::size_t j = 0; j < data.tcscs.size(); ++j) {
        auto& k = x(static_cast<Eigen::Index>(layout.tcsc(j)));
        k = std::clamp(k, data.tcscs[j].kmin, data.tcscs[j].kmax);
    }
}

}  // namespace

std::vector<Event> snap_events(std::vector<Event> events, double dt,
                               std::vector<SimulationWarning>& warnings) {
    for (auto& e : events) {
        for (double* t : {&e.t, &e.t_clear}) {
            if (!std::isfinite(*t)) continue;
            const double s = snap(*t, dt);
            if (std::abs(s - *t) > 1e-9) {
                std::ostringstream msg;
                msg << "event time " << *t << " s snapped to " << s << " s";
                warnings.push_back({static_cast<std::size_t>(std::llround(s / dt)), msg.str()});
            }
            // Quarter-step offset keeps comparisons against k*dt robust to rounding.
            *t = s - 0.25 * dt;
        }
    }
    return events;
}

DynamicState step_system(const PowerSystem& ps, const DynamicState& state, const Inputs& u,
                         const Conditions& c, double dt, std::size_t step_index,
                         const CMatrix* static_y) {
    CMatrix local;
    if (!static_y) {
        local = ps.static_admittance(c);
        static_y = &local;
    }
    auto f = [&](const Eigen::VectorXd& x) {
        const CVector v = ps.solve(x, c, static_y);
        return ps.derivatives(x, v, u, c);
    };
    const Eigen::VectorXd f0 = f(state.x);
    Eigen::VectorXd xp = state.x + dt * f0;
    clamp_limited(ps, xp);
    const Eigen::VectorXd f1 = f(xp);
    DynamicState next;
    next.x = state.x + 0.5 * dt * (f0 + f1);
    clamp_limited(ps, next.x);
    if (!next.x.allFinite()) {
        throw DivergenceError("simulation diverged at step " + std::to_string(step_index), step_index);
    }
    return next;
}

RawSeries run_simulation(const PowerSystem& ps, const std::vector<Event>& events,
                         const Channel& measurement, std::size_t actuator, const ControllerHook& hook,
                         const SimulationOptions& opt) {
    if (!(opt.dt > 0.0)) throw ModelError("time step must be positive");
    RawSeries out;
    const auto snapped = snap_events(events, opt.dt, out.warnings);
    const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.controller_period / opt.dt)));
    out.controller_stride = stride;

    const auto nm = ps.data().machines.size();
    out.speeds.assign(nm, {});
    for (auto& s : out.speeds) s.reserve(steps + 1);
    out.t.reserve(steps + 1);
    out.y.reserve(steps + 1);
    out.u.reserve(steps + 1);

    Inputs inputs = ps.zero_inputs();
    DynamicState state{ps.initial_state(), ps.initial_voltages()};

    // Static admittance is cached per distinct condition set.
    Conditions cached_c;
    CMatrix cached_y;
    bool have_cache = false;

    double u = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * opt.dt;
        const Conditions c = conditions_at(snapped, t);
        if (!have_cache || !(c == cached_c)) {
            cached_y = ps.static_admittance(c);
            cached_c = c;
            have_cache = true;
        }
        state.v = ps.solve(state.x, c, &cached_y);
        const double y = ps.measure(measurement, state.x, state.v);

        if (k % stride == 0) {
            u = (hook && c.pod_enabled) ? hook(t, y) : 0.0;
            if (!std::isfinite(u)) {
                throw DivergenceError("controller produced a non-finite output at step " + std::to_string(k), k);
            }
        }

        out.t.push_back(t);
        out.y.push_back(y);
        out.u.push_back(u);
        for (std::size_t i = 0; i < nm; ++i) {
            const double dw = state.x(static_cast<Eigen::Index>(ps.layout().machine(i) + kSpeed));
            if (std::abs(dw) > opt.max_speed_deviation) {
                throw DivergenceError("speed deviation of " + ps.data().machines[i].name + " exceeded " +
                                          std::to_string(opt.max_speed_deviation) + " p.u. at step " +
                                          std::to_string(k),
                                      k);
            }
            out.speeds[i].push_back(dw);
        }
        if (opt.record_states) out.states.push_back(state.x);
        if (opt.record_voltages) out.voltages.push_back(state.v);

        if (k == steps) break;
        if (actuator < inputs.tcsc_modulation.size()) inputs.tcsc_modulation[actuator] = u;
        state = step_system(ps, state, inputs, c, opt.dt, k, &cached_y);
    }
    return out;
}

}  // namespace podlab::grid

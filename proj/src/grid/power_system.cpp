#include "podlab/grid/power_system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "podlab/errors.hpp"

namespace podlab::grid {

namespace {
constexpr Complex kJ{0.0, 1.0};

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::array<double, kMachineStates> machine_slice(const Eigen::VectorXd& x, std::size_t at) {
    std::array<double, kMachineStates> s{};
    for (std::size_t k = 0; k < kMachineStates; ++k) s[k] = x(idx(at + k));
    return s;
}
}  // namespace

std::optional<std::size_t> CaseData::find_machine(const std::string& name) const {
    for (std::size_t i = 0; i < machines.size(); ++i) {
        if (machines[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> CaseData::find_tcsc(const std::string& name) const {
    for (std::size_t i = 0; i < tcscs.size(); ++i) {
        if (tcscs[i].name == name) return i;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Layout

StateLayout::StateLayout(const CaseData& data) {
    static constexpr std::array<const char*, kMachineStates> kMachineNames{
        "delta", "speed", "eq_t", "ed_t", "eq_st", "ed_st"};
    const auto n = data.machines.size();
    machine_.assign(n, npos);
    avr_.assign(n, npos);
    pss_.assign(n, npos);
    gov_.assign(n, npos);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = data.machines[i];
        machine_[i] = size_;
        for (const auto* s : kMachineNames) labels_.push_back(m.name + "." + s);
        size_ += kMachineStates;
        if (m.avr) {
            avr_[i] = size_;
            labels_.push_back(m.name + ".avr.lead_lag");
            labels_.push_back(m.name + ".avr.efd");
            size_ += kSexsStates;
        }
        if (m.pss) {
            pss_[i] = size_;
            labels_.push_back(m.name + ".pss.washout");
            labels_.push_back(m.name + ".pss.lead_lag");
            size_ += kPssStates;
        }
        if (m.governor) {
            gov_[i] = size_;
            labels_.push_back(m.name + ".gov.pm");
            size_ += 1;
        }
    }
    for (const auto& t : data.tcscs) {
        tcsc_.push_back(size_);
        labels_.push_back(t.name + ".k");
        size_ += 1;
    }
}

Eigen::VectorXd flatten(const StateLayout& layout, const StructuredState& s) {
    Eigen::VectorXd x(idx(layout.size()));
    for (std::size_t i = 0; i < layout.machine_count(); ++i) {
        for (std::size_t k = 0; k < kMachineStates; ++k) x(idx(layout.machine(i) + k)) = s.machines[i][k];
        if (layout.avr(i) != StateLayout::npos) {
            for (std::size_t k = 0; k < kSexsStates; ++k) x(idx(layout.avr(i) + k)) = s.avrs[i].value()[k];
        }
        if (layout.pss(i) != StateLayout::npos) {
            for (std::size_t k = 0; k < kPssStates; ++k) x(idx(layout.pss(i) + k)) = s.pss[i].value()[k];
        }
        if (layout.governor(i) != StateLayout::npos) x(idx(layout.governor(i))) = s.governors[i].value();
    }
    for (std::size_t j = 0; j < layout.tcsc_count(); ++j) x(idx(layout.tcsc(j))) = s.tcscs[j];
    return x;
}

StructuredState unflatten(const StateLayout& layout, const Eigen::VectorXd& x) {
    const auto n = layout.machine_count();
    StructuredState s;
    s.machines.resize(n);
    s.avrs.resize(n);
    s.pss.resize(n);
    s.governors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.machines[i] = machine_slice(x, layout.machine(i));
        if (layout.avr(i) != StateLayout::npos) {
            s.avrs[i] = {x(idx(layout.avr(i))), x(idx(layout.avr(i) + 1))};
        }
        if (layout.pss(i) != StateLayout::npos) {
            s.pss[i] = {x(idx(layout.pss(i))), x(idx(layout.pss(i) + 1))};
        }
        if (layout.governor(i) != StateLayout::npos) s.governors[i] = x(idx(layout.governor(i)));
    }
    for (std::size_t j = 0; j < layout.tcsc_count(); ++j) s.tcscs.push_back(x(idx(layout.tcsc(j))));
    return s;
}

// ---------------------------------------------------------------------------
// Events

Conditions conditions_at(const std::vector<Event>& events, double t) {
    Conditions c;
    // Toggles apply in time order so the latest one wins.
    std::vector<const Event*> toggles;
    for (const auto& e : events) {
        switch (e.kind) {
        case Event::Kind::BusFault:
            if (t >= e.t && t < e.t_clear) c.faults[e.target] += e.admittance;
            break;
        case Event::Kind::BranchTrip:
            if (t >= e.t) c.tripped.insert(e.target);
            break;
        case Event::Kind::ControllerToggle:
            if (t >= e.t) toggles.push_back(&e);
            break;
        }
    }
    std::stable_sort(toggles.begin(), toggles.end(),
                     [](const Event* a, const Event* b) { return a->t < b->t; });
    for (const auto* e : toggles) {
        if (e->controller == "pod") {
            c.pod_enabled = e->enabled;
        } else {
            c.pss_enabled[e->target] = e->enabled;
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Load flow

LoadFlowResult solve_load_flow(const CaseData& data, double tol, int max_iter) {
    const auto& net = data.network;
    const auto n = idx(net.bus_count());

    AdmittanceTerms terms;
    for (const auto& t : data.tcscs) terms.compensation[t.branch] = t.x_ref;
    const CMatrix y = assemble_admittance(net, terms);

    enum class Type { PQ, PV, Slack };
    std::vector<Type> type(net.bus_count(), Type::PQ);
    Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd va = Eigen::VectorXd::Constant(n, data.slack.angle_deg * std::numbers::pi / 180.0);

    for (const auto& l : net.loads) {
        p_spec(idx(l.bus)) -= l.p;
        q_spec(idx(l.bus)) -= l.q;
    }
    for (const auto& m : data.machines) {
        if (m.bus == data.slack.bus) continue;
        type[m.bus] = Type::PV;
        p_spec(idx(m.bus)) += m.p_set;
        vm(idx(m.bus)) = m.v_set;
    }
    type[data.slack.bus] = Type::Slack;
    vm(idx(data.slack.bus)) = data.slack.v;

    std::vector<Eigen::Index> pvpq, pq;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (type[static_cast<std::size_t>(i)] != Type::Slack) pvpq.push_back(i);
        if (type[static_cast<std::size_t>(i)] == Type::PQ) pq.push_back(i);
    }
    const auto npvpq = static_cast<Eigen::Index>(pvpq.size());
    const auto npq = static_cast<Eigen::Index>(pq.size());

    auto voltage = [&] {
        CVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
        return v;
    };

    LoadFlowResult out;
    for (int it = 0; it <= max_iter; ++it) {
        const CVector v = voltage();
        const CVector ibus = y * v;
        Eigen::VectorXd f(npvpq + npq);
        for (Eigen::Index k = 0; k < npvpq; ++k) {
            const auto i = pvpq[static_cast<std::size_t>(k)];
            f(k) = (v(i) * std::conj(ibus(i))).real() - p_spec(i);
        }
        for (Eigen::Index k = 0; k < npq; ++k) {
            const auto i = pq[static_cast<std::size_t>(k)];
            f(npvpq + k) = (v(i) * std::conj(ibus(i))).imag() - q_spec(i);
        }
        out.mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
        out.iterations = it;
        if (out.mismatch < tol) {
            out.v = v;
            return out;
        }
        if (it == max_iter) break;

        // Complex sensitivities dS/dVa and dS/dVm.
        const CMatrix diag_v = v.asDiagonal();
        const CMatrix diag_i = ibus.asDiagonal();
        CVector vnorm(n);
        for (Eigen::Index i = 0; i < n; ++i) vnorm(i) = v(i) / std::abs(v(i));
        const CMatrix diag_vn = vnorm.asDiagonal();
        const CMatrix ds_dvm = diag_v * (y * diag_vn).conjugate() + diag_i.conjugate() * diag_vn;
        const CMatrix ds_dva = kJ * diag_v * (diag_i - y * diag_v).conjugate();

        Eigen::MatrixXd jac(npvpq + npq, npvpq + npq);
        for (Eigen::Index r = 0; r < npvpq; ++r) {
            const auto i = pvpq[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < npvpq; ++c) jac(r, c) = ds_dva(i, pvpq[static_cast<std::size_t>(c)]).real();
            for (Eigen::Index c = 0; c < npq; ++c) jac(r, npvpq + c) = ds_dvm(i, pq[static_cast<std::size_t>(c)]).real();
        }
        for (Eigen::Index r = 0; r < npq; ++r) {
            const auto i = pq[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < npvpq; ++c) jac(npvpq + r, c) = ds_dva(i, pvpq[static_cast<std::size_t>(c)]).imag();
            for (Eigen::Index c = 0; c < npq; ++c) jac(npvpq + r, npvpq + c) = ds_dvm(i, pq[static_cast<std::size_t>(c)]).imag();
        }
        const Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
        for (Eigen::Index k = 0; k < npvpq; ++k) va(pvpq[static_cast<std::size_t>(k)]) += dx(k);
        for (Eigen::Index k = 0; k < npq; ++k) vm(pq[static_cast<std::size_t>(k)]) += dx(npvpq + k);
    }
    std::ostringstream msg;
    msg << "load flow did not converge in " << max_iter << " iterations (mismatch " << out.mismatch
        << ")";
    throw ModelError(msg.str());
}

// ---------------------------------------------------------------------------
// Initialization

PowerSystem PowerSystem::initialize(CaseData data) {
    PowerSystem ps;
    const auto& net = data.network;
    const auto nbus = net.bus_count();

    for (const auto& m : data.machines) {
        if (std::abs(m.params.xd_st - m.params.xq_st) > 1e-12) {
            throw ModelError("machine " + m.name +
                             ": subtransient reactances X''d and X''q must be equal");
        }
        if (m.bus == data.slack.bus && data.slack.infinite) {
            throw ModelError("machine " + m.name + " sits on the infinite bus");
        }
    }
    for (std::size_t i = 0; i < data.machines.size(); ++i) {
        for (std::size_t j = i + 1; j < data.machines.size(); ++j) {
            if (data.machines[i].bus == data.machines[j].bus) {
                throw ModelError("more than one machine on bus " + net.buses[data.machines[i].bus].name);
            }
        }
    }
    if (!data.slack.infinite &&
        std::none_of(data.machines.begin(), data.machines.end(),
                     [&](const MachineData& m) { return m.bus == data.slack.bus; })) {
        throw ModelError("finite slack bus must host a machine");
    }

    ps.v0_ = data.preset_voltages ? *data.preset_voltages : solve_load_flow(data).v;
    if (static_cast<std::size_t>(ps.v0_.size()) != nbus) {
        throw ModelError("preset voltage vector length does not match bus count");
    }

    // Constant-impedance loads from the operating point.
    ps.load_y_.assign(nbus, Complex{0.0, 0.0});
    std::vector<Complex> load_s(nbus, Complex{0.0, 0.0});
    for (const auto& l : net.loads) {
        const double vm2 = std::norm(ps.v0_(idx(l.bus)));
        ps.load_y_[l.bus] += Complex{l.p, -l.q} / vm2;
        load_s[l.bus] += Complex{l.p, l.q};
    }

    AdmittanceTerms terms;
    for (const auto& t : data.tcscs) terms.compensation[t.branch] = t.x_ref;
    const CMatrix y_branches = assemble_admittance(net, terms);
    const CVector ibus = y_branches * ps.v0_;

    ps.layout_ = StateLayout(data);
    StructuredState s;
    const auto nm = data.machines.size();
    s.machines.resize(nm);
    s.avrs.resize(nm);
    s.pss.resize(nm);
    s.governors.resize(nm);
    ps.v_ref_.assign(nm, 0.0);
    ps.p_ref_.assign(nm, 0.0);
    ps.efd0_.assign(nm, 0.0);

    for (std::size_t i = 0; i < nm; ++i) {
        const auto& m = data.machines[i];
        const auto& p = m.params;
        const Complex v = ps.v0_(idx(m.bus));
        const Complex s_gen = v * std::conj(ibus(idx(m.bus))) + load_s[m.bus];
        const Complex cur = std::conj(s_gen / v);

        const double delta = std::arg(v + kJ * p.xq * cur);
        const Complex idq = to_dq(cur, delta);
        const Complex vdq = to_dq(v, delta);
        const double id = idq.real();
        const double iq = idq.imag();
        const double eq_st = vdq.imag() + p.xd_st * id;
        const double ed_st = vdq.real() - p.xq_st * iq;
        const double eq_t = eq_st + (p.xd_t - p.xd_st) * id;
        const double ed_t = (p.xq - p.xq_t) * iq;
        const double efd = eq_t + (p.xd - p.xd_t) * id;
        const double pm = eq_st * iq + ed_st * id;

        s.machines[i] = {delta, 0.0, eq_t, ed_t, eq_st, ed_st};
        ps.efd0_[i] = efd;
        ps.p_ref_[i] = pm;
        ps.v_ref_[i] = std::abs(v);
        if (m.avr) {
            if (efd < m.avr->efd_min || efd > m.avr->efd_max) {
                std::ostringstream msg;
                msg << "machine " << m.name << ": initial field voltage " << efd
                    << " outside exciter limits";
                throw ModelError(msg.str());
            }
            s.avrs[i] = std::array<double, kSexsStates>{efd / m.avr->k, efd};
            ps.v_ref_[i] = std::abs(v) + efd / m.avr->k;
        }
        if (m.pss) s.pss[i] = std::array<double, kPssStates>{0.0, 0.0};
        if (m.governor) s.governors[i] = pm;
    }
    for (const auto& t : data.tcscs) {
        s.tcscs.push_back(t.x_ref);
        ps.tcsc_branches_.insert(t.branch);
    }
    if (data.slack.infinite) ps.fixed_[data.slack.bus] = ps.v0_(idx(data.slack.bus));

    ps.x0_ = flatten(ps.layout_, s);
    ps.data_ = std::move(data);
    return ps;
}

double PowerSystem::omega_base() const { return 2.0 * std::numbers::pi * data_.f_base; }

Inputs PowerSystem::zero_inputs() const {
    return Inputs{std::vector<double>(data_.tcscs.size(), 0.0)};
}

// ---------------------------------------------------------------------------
// Network

CMatrix PowerSystem::static_admittance(const Conditions& c) const {
    AdmittanceTerms terms;
    terms.bus_shunts = load_y_;
    for (const auto& m : data_.machines) terms.bus_shunts[m.bus] += 1.0 / (kJ * m.params.xd_st);
    for (const auto& [bus, yf] : c.faults) terms.bus_shunts[bus] += yf;
    terms.tripped = c.tripped;
    terms.excluded = tcsc_branches_;
    return assemble_admittance(data_.network, terms);
}

void PowerSystem::stamp_tcscs(CMatrix& y, const Eigen::VectorXd& x, const Conditions& c) const {
    for (std::size_t j = 0; j < data_.tcscs.size(); ++j) {
        const auto& t = data_.tcscs[j];
        const auto& br = data_.network.branches[t.branch];
        if (!br.in_service || c.tripped.count(t.branch)) continue;
        stamp_branch(y, br, tcsc_compensation(j, x));
    }
}

CMatrix PowerSystem::admittance(const Eigen::VectorXd& x, const Conditions& c) const {
    CMatrix y = static_admittance(c);
    stamp_tcscs(y, x, c);
    return y;
}

CVector PowerSystem::norton_injections(const Eigen::VectorXd& x) const {
    CVector inj = CVector::Zero(idx(data_.network.bus_count()));
    for (std::size_t i = 0; i < data_.machines.size(); ++i) {
        const auto& m = data_.machines[i];
        const auto at = layout_.machine(i);
        const Complex emf = subtransient_emf(x(idx(at + kDelta)), x(idx(at + kEqSt)), x(idx(at + kEdSt)));
        inj(idx(m.bus)) += emf / (kJ * m.params.xd_st);
    }
    return inj;
}

CVector PowerSystem::solve(const Eigen::VectorXd& x, const Conditions& c, const CMatrix* static_y) const {
    CMatrix y = static_y ? *static_y : static_admittance(c);
    stamp_tcscs(y, x, c);
    return solve_network(y, norton_injections(x), fixed_);
}

double PowerSystem::tcsc_compensation(std::size_t j, const Eigen::VectorXd& x) const {
    const auto& t = data_.tcscs[j];
    return std::clamp(x(idx(layout_.tcsc(j))), t.kmin, t.kmax);
}

// ---------------------------------------------------------------------------
// Dynamics

Eigen::VectorXd PowerSystem::derivatives(const Eigen::VectorXd& x, const CVector& v, const Inputs& u,
                                         const Conditions& c) const {
    Eigen::VectorXd dx(x.size());
    const double wb = omega_base();

    for (std::size_t i = 0; i < data_.machines.size(); ++i) {
        const auto& m = data_.machines[i];
        const auto at = layout_.machine(i);
        const auto s = machine_slice(x, at);
        const Complex vt = v(idx(m.bus));
        const auto st = stator(s, m.params, vt);
        const double speed = s[kSpeed];

        double vpss = 0.0;
        if (m.pss) {
            const auto& p = *m.pss;
            const auto ps_at = layout_.pss(i);
            const double xw = x(idx(ps_at + kPssWashout));
            const double xl = x(idx(ps_at + kPssLeadLag));
            const double yw = p.k * speed - xw;
            dx(idx(ps_at + kPssWashout)) = (p.k * speed - xw) / p.tw;
            dx(idx(ps_at + kPssLeadLag)) = (yw - xl) / p.t2;
            const auto it = c.pss_enabled.find(i);
            const bool enabled = it == c.pss_enabled.end() ? p.enabled : it->second;
            if (enabled) {
                const double out = p.t1 / p.t2 * yw + (1.0 - p.t1 / p.t2) * xl;
                vpss = std::clamp(out, -p.vmax, p.vmax);
            }
        }

        double efd = efd0_[i];
        if (m.avr) {
            const auto& p = *m.avr;
            const auto av = layout_.avr(i);
            const double xll = x(idx(av + kSexsLeadLag));
            const double e = x(idx(av + kSexsEfd));
            const double err = v_ref_[i] - std::abs(vt) + vpss;
            dx(idx(av + kSexsLeadLag)) = (err - xll) / p.tb;
            dx(idx(av + kSexsEfd)) =
                limited_lag(e, p.k * sexs_lead_lag_output(xll, err, p), p.te, p.efd_min, p.efd_max);
            efd = std::clamp(e, p.efd_min, p.efd_max);
        }

        double pm = p_ref_[i];
        if (m.governor) {
            const auto& p = *m.governor;
            const auto g = layout_.governor(i);
            pm = x(idx(g));
            dx(idx(g)) = (p_ref_[i] - speed / p.r - pm) / p.tg;
        }

        const auto ds = machine_derivatives(s, m.params, st, efd, pm, wb);
        for (std::size_t k = 0; k < kMachineStates; ++k) dx(idx(at + k)) = ds[k];
    }

    for (std::size_t j = 0; j < data_.tcscs.size(); ++j) {
        const auto& t = data_.tcscs[j];
        const auto at = idx(layout_.tcsc(j));
        const double mod = j < u.tcsc_modulation.size() ? u.tcsc_modulation[j] : 0.0;
        dx(at) = limited_lag(x(at), t.x_ref + mod, t.t, t.kmin, t.kmax);
    }

    for (Eigen::Index k = 0; k < dx.size(); ++k) {
        if (!std::isfinite(dx(k))) {
            throw NonFiniteDerivativeError("non-finite derivative in state " +
                                           layout_.labels()[static_cast<std::size_t>(k)]);
        }
    }
    return dx;
}

double PowerSystem::measure(const Channel& ch, const Eigen::VectorXd& x, const CVector& v) const {
    switch (ch.kind) {
    case Channel::Kind::MachineSpeed:
        return x(idx(layout_.machine(ch.index) + kSpeed));
    case Channel::Kind::BranchActivePower: {
        const auto& br = data_.network.branches[ch.index];
        double k = 0.0;
        for (std::size_t j = 0; j < data_.tcscs.size(); ++j) {
            if (data_.tcscs[j].branch == ch.index) k = tcsc_compensation(j, x);
        }
        if (ch.from_end) {
            return (v(idx(br.from)) * std::conj(branch_current_from(br, v, k))).real();
        }
        return (v(idx(br.to)) * std::conj(branch_current_to(br, v, k))).real();
    }
    case Channel::Kind::BusVoltageMagnitude:
        return std::abs(v(idx(ch.index)));
    }
    return 0.0;
}

}  // namespace podlab::grid

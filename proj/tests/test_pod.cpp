#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "podlab/pod/phasor.hpp"
#include "support.hpp"

using namespace podlab;
using namespace podlab::pod;
using cd = std::complex<double>;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

PodConfig config(double f_hz, double k_c = 0.5, double period = 0.02) {
    PodConfig c;
    c.omega = kTau * f_hz;
    c.k_c = k_c;
    c.period = period;
    return c;
}

/// Exactly discretized single undamped mode: z' = jw z + (psi b) u,
/// y = 2 Re(c phi z), with residue r = (c phi)(psi b).
struct SingleMode {
    double omega;
    double dt;
    cd cphi;
    cd psib;
    cd z;

    void step(double u) {
        const cd lambda(0.0, omega);
        const cd rot = std::exp(lambda * dt);
        z = rot * z + (psib / lambda) * (rot - 1.0) * u;
    }
    double y() const { return 2.0 * (cphi * z).real(); }
    cd phasor(double t) const { return 2.0 * cphi * z * std::exp(cd(0.0, -omega * t)); }
};

double min_eigenvalue(const Eigen::Matrix3d& p) {
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(p).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("g and h closed forms") {
    CHECK(g_func(0.3, 2.0, 0.0) == 0.0);
    CHECK(h_func(0.3, 2.0, 0.0) == 0.0);
    CHECK(g_func(0.0, kTau, 0.02) == testing::approx(0.03989480731090014).epsilon(1e-14));
    CHECK(h_func(0.0, kTau, 0.02) == testing::approx(0.0025099685271137416).epsilon(1e-12));
    CHECK(g_func(0.0, kTau, 0.02) == testing::approx(2.0 / kTau * std::sin(0.04 * std::numbers::pi)).epsilon(1e-15));
    CHECK(h_func(0.0, kTau, 0.02) ==
          testing::approx(2.0 / kTau * (1.0 - std::cos(0.04 * std::numbers::pi))).epsilon(1e-13));
}

TEST_CASE("g and h are periodic in t") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        const double w = testing::uniform(rng, 0.5, 20.0);
        const double t = testing::uniform(rng, 0.0, 5.0);
        const double dt = testing::uniform(rng, 0.001, 0.05);
        const double period = kTau / w;
        CHECK(std::abs(g_func(t + period, w, dt) - g_func(t, w, dt)) < 1e-12);
        CHECK(std::abs(h_func(t + period, w, dt) - h_func(t, w, dt)) < 1e-12);
    }
}

TEST_CASE("g and h reproduce the complex recursion") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 1000; ++i) {
        const double w = testing::uniform(rng, 0.5, 20.0);
        const double t = testing::uniform(rng, 0.0, 30.0);
        const double dt = testing::uniform(rng, 0.001, 0.05);
        const cd r = std::polar(testing::uniform(rng, 0.01, 2.0), testing::uniform(rng, -3.14, 3.14));
        const cd lhs = r * cd(g_func(t, w, dt), -h_func(t, w, dt));
        const cd rhs = 2.0 * r / cd(0.0, w) * (std::exp(cd(0.0, w * dt)) - 1.0) * std::exp(cd(0.0, -w * (t + dt)));
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("observation row reconstructs the signal model") {
    PhasorEstimate e;
    e.average = 0.4;
    e.d = 1.3;
    e.q = -0.7;
    const double w = 5.0, t = 1.234;
    const double direct = e.average + e.d * std::cos(w * t) - e.q * std::sin(w * t);
    CHECK(observation_row(w, t).dot(e.x()) == testing::approx(direct).epsilon(1e-15));
    CHECK(e.average + e.oscillation(w, t) == testing::approx(direct).epsilon(1e-15));
}

TEST_CASE("zero-input prediction keeps the state and adds process noise") {
    auto cfg = config(1.0);
    cfg.residue = cd(0.3, -0.2);
    auto e = initial_estimate(cfg);
    e.set_x({0.1, 0.2, 0.3});
    const auto next = kf_predict(e, 0.0, cfg);
    CHECK((next.x() - e.x()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((next.p - e.p - kalman_matrices(cfg, e.t).qcov).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(next.t == testing::approx(e.t + cfg.period));
}

TEST_CASE("prediction moves the phasor by the control-input model") {
    auto cfg = config(1.0);
    cfg.residue = cd(1.0, 0.0);
    PhasorEstimate e;
    const auto next = kf_predict(e, 1.0, cfg);
    CHECK(next.d == testing::approx(0.03989480731090014).epsilon(1e-14));
    CHECK(next.q == testing::approx(-0.0025099685271137416).epsilon(1e-12));
    CHECK(next.average == 0.0);
}

TEST_CASE("prediction follows the exact single-mode recursion") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const double f = testing::uniform(rng, 0.2, 2.0);
        auto cfg = config(f, 0.5, trial % 2 ? 0.01 : 0.02);
        SingleMode m{cfg.omega, cfg.period, std::polar(0.7, testing::uniform(rng, -3, 3)),
                     std::polar(0.05, testing::uniform(rng, -3, 3)), cd(0.3, -0.1)};
        cfg.residue = m.cphi * m.psib;
        PhasorEstimate e;
        const cd s0 = m.phasor(0.0);
        e.d = s0.real();
        e.q = s0.imag();
        double worst = 0.0;
        for (int k = 0; k < 500; ++k) {
            const double u = testing::uniform(rng, -1.0, 1.0);
            m.step(u);
            e = kf_predict(e, u, cfg);
            const cd s = m.phasor(e.t);
            worst = std::max({worst, std::abs(e.d - s.real()), std::abs(e.q - s.imag())});
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("correction with zero innovation or zero covariance") {
    auto cfg = config(1.0);
    auto e = initial_estimate(cfg, 0.3);
    e.set_x({0.5, 1.0, -2.0});
    const double y = observation_row(cfg.omega, e.t).dot(e.x());
    double nu = 1.0;
    const auto same = kf_correct(e, y, cfg, &nu);
    CHECK(std::abs(nu) < 1e-12);
    CHECK((same.x() - e.x()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(same.p.trace() <= e.p.trace());

    e.p.setZero();
    const auto confident = kf_correct(e, 123.0, cfg);
    CHECK((confident.x() - e.x()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance stays symmetric positive semidefinite") {
    std::mt19937_64 rng(41);
    auto cfg = config(0.8, 0.3);
    cfg.residue = cd(-0.02, 0.015);
    auto e = initial_estimate(cfg);
    double worst_min = 0.0, worst_asym = 0.0;
    for (int k = 0; k < 10000; ++k) {
        e = kf_correct(e, testing::uniform(rng, -1, 1), cfg);
        worst_min = std::min(worst_min, min_eigenvalue(e.p));
        worst_asym = std::max(worst_asym, (e.p - e.p.transpose()).cwiseAbs().maxCoeff());
        e = kf_predict(e, testing::uniform(rng, -1, 1), cfg);
        worst_min = std::min(worst_min, min_eigenvalue(e.p));
        worst_asym = std::max(worst_asym, (e.p - e.p.transpose()).cwiseAbs().maxCoeff());
    }
    CHECK(worst_asym == 0.0);
    CHECK(worst_min >= -1e-12);
}

TEST_CASE("Kalman estimator locks onto a sinusoid") {
    auto cfg = config(1.0, 0.5);
    PodState st = initial_pod_state(cfg);
    const int ticks = static_cast<int>(std::lround(10.0 / cfg.period));
    for (int k = 0; k <= ticks; ++k) {
        const double t = k * cfg.period;
        pod_step(st, 2.0 * std::cos(cfg.omega * t) - 3.0 * std::sin(cfg.omega * t), cfg, t);
    }
    CHECK(st.estimate.d == testing::approx(2.0).epsilon(0.02));
    CHECK(st.estimate.q == testing::approx(3.0).epsilon(0.02));
}

TEST_CASE("start-up covariance converges within one second") {
    auto cfg = config(1.0, 0.5);
    PodState st = initial_pod_state(cfg);
    TickRecord rec;
    for (int k = 0; k * cfg.period <= 1.0 + 1e-12; ++k) {
        const double t = k * cfg.period;
        pod_step(st, 2.0 * std::cos(cfg.omega * t) - 3.0 * std::sin(cfg.omega * t), cfg, t, &rec);
    }
    CHECK(rec.d == testing::approx(2.0).epsilon(0.02));
    CHECK(rec.q == testing::approx(3.0).epsilon(0.02));
}

TEST_CASE("low-pass estimator settles on a constant and on a sinusoid") {
    auto cfg = config(1.0, 0.2);
    cfg.estimator = EstimatorKind::Lpf;
    LpfState st;
    PhasorEstimate e;
    for (int k = 0; k < 2000; ++k) e = lpf_estimate_update(st, 1.5, k * cfg.period, cfg);
    CHECK(e.average == testing::approx(1.5).epsilon(1e-9));
    CHECK(std::abs(e.d) < 1e-9);
    CHECK(std::abs(e.q) < 1e-9);

    for (double k_c : {0.2, 0.5}) {
        cfg.k_c = k_c;
        LpfState s2;
        for (int k = 0; k < 1500; ++k) {
            const double t = k * cfg.period;
            e = lpf_estimate_update(s2, 2.0 * std::cos(cfg.omega * t) - 3.0 * std::sin(cfg.omega * t), t, cfg);
        }
        CHECK(e.d == testing::approx(2.0).epsilon(0.02));
        CHECK(e.q == testing::approx(3.0).epsilon(0.02));
    }
}

TEST_CASE("damping control law") {
    auto cfg = config(1.0);
    PhasorEstimate e;
    e.d = 1.0;
    CHECK(damping_control(e, cfg, 0.0) == 0.0);
    cfg.gain = 7.0;
    CHECK(damping_control(e, cfg, 0.0) == testing::approx(7.0));
    cfg.beta_deg = 90.0;
    CHECK(std::abs(damping_control(e, cfg, 0.0)) < 1e-14);

    cfg.beta_deg = 33.0;
    e.q = -0.4;
    const double u1 = damping_control(e, cfg, 0.37);
    cfg.gain = 14.0;
    CHECK(damping_control(e, cfg, 0.37) == 2.0 * u1);

    cfg.u_max = 0.01;
    cfg.u_min = -0.01;
    CHECK(std::abs(damping_control(e, cfg, 0.37)) == testing::approx(0.01));
}

TEST_CASE("zero residue reduces to the plain filter") {
    std::mt19937_64 rng(51);
    auto plain = config(0.9, 0.3);
    plain.gain = 12.0;
    plain.beta_deg = 40.0;
    auto zero = plain;
    zero.residue = cd(0.0, 0.0);
    PodController a(plain), b(zero);
    for (int k = 0; k < 1000; ++k) {
        const double t = k * plain.period;
        const double y = std::sin(plain.omega * t) + testing::uniform(rng, -0.1, 0.1);
        CHECK(a.step(t, y) == b.step(t, y));
    }
}

TEST_CASE("control-input model cancels innovations on the exact mode") {
    std::mt19937_64 rng(61);
    auto cfg = config(1.0, 0.5);
    SingleMode base{cfg.omega, cfg.period, std::polar(0.5, 0.4), std::polar(0.08, -1.1), cd(0.5, 0.2)};
    const cd r = base.cphi * base.psib;
    auto run = [&](bool cim) {
        auto c = cfg;
        if (cim) c.residue = r;
        SingleMode m = base;
        auto e = initial_estimate(c);
        std::mt19937_64 local(rng());
        double late = 0.0, amplitude = 0.0;
        for (int k = 0; k < 3000; ++k) {
            double nu = 0.0;
            e = kf_correct(e, m.y(), c, &nu);
            amplitude = std::max(amplitude, std::abs(m.y()));
            if (k >= 2500) late = std::max(late, std::abs(nu));
            const double u = testing::uniform(local, -1.0, 1.0);
            e = kf_predict(e, u, c);
            m.step(u);
        }
        return late / amplitude;
    };
    CHECK(run(true) < 1e-6);
    CHECK(run(false) > 1e-3);
}

TEST_CASE("configuration validation") {
    auto cfg = config(1.0);
    CHECK_NOTHROW(cfg.validate());
    cfg.period = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = config(1.0);
    cfg.u_min = 1.0;
    cfg.u_max = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

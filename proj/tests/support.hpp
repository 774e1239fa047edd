#pragma once

#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "podlab/grid/case_io.hpp"
#include "podlab/grid/power_system.hpp"
#include "podlab/harness/studies.hpp"

namespace podlab::testing {

inline std::filesystem::path data_file(const std::string& name) {
    return harness::default_data_dir() / name;
}

/// Machine behind a line to an infinite bus. With transient and subtransient
/// reactances equal to the synchronous ones, and no controls, the flux states
/// decouple and the rotor behaves as a classical constant-EMF machine.
inline grid::CaseData classical_smib(double x_line = 0.5, double p = 0.8, double h = 4.0) {
    grid::CaseData c;
    c.name = "classical";
    c.s_base = 100.0;
    c.f_base = 60.0;
    c.network.buses = {{"M", 20.0}, {"INF", 20.0}};
    grid::Branch br;
    br.name = "L";
    br.from = 0;
    br.to = 1;
    br.z = {0.0, x_line};
    c.network.branches.push_back(br);
    grid::MachineData m;
    m.name = "G";
    m.bus = 0;
    m.p_set = p;
    m.v_set = 1.0;
    m.params.h = h;
    m.params.d = 0.0;
    m.params.xd = m.params.xq = m.params.xd_t = m.params.xq_t = m.params.xd_st = m.params.xq_st = 0.3;
    c.machines.push_back(m);
    c.slack.bus = 1;
    c.slack.v = 1.0;
    c.slack.infinite = true;
    return c;
}

inline grid::Channel speed_channel(std::size_t machine = 0) {
    grid::Channel ch;
    ch.kind = grid::Channel::Kind::MachineSpeed;
    ch.index = machine;
    return ch;
}

/// Relative comparison; doctest's default adds an absolute scale of 1.
inline doctest::Approx approx(double v) { return doctest::Approx(v).scale(0.0); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace podlab::testing

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "podlab/grid/power_system.hpp"

namespace podlab::grid {

/// Case file schema (JSON):
///
///   name, s_base (MVA), f_base (Hz)
///   buses:     [{name, base_kv}]
///   branches:  [{name, from, to, r, x, b?, ratio?, in_service?}]
///   loads:     [{bus, p, q}]                       p.u. on s_base
///   machines:  [{name, bus, p, v, params{H, D, Xd, Xq, Xd_t, Xq_t, Xd_st, Xq_st,
///                 Td0_t, Tq0_t, Td0_st, Tq0_st}, avr?, pss?, governor?}]
///     avr:      {TA_TB, TB, K, TE, Efd_min, Efd_max}
///     pss:      {K, Tw, T1, T2, Vmax, enabled?}
///     governor: {R, Tg}
///   tcscs:     [{name, branch, x_ref, T, min, max}]
///   slack:     {bus, v, angle_deg?, infinite?}
///   preset_voltages?: [[re, im], ...] one per bus
///
/// Bus and branch references are by name. Errors raise ScenarioError with
/// the JSON path of the offending field.
CaseData parse_case(const nlohmann::json& j);
CaseData load_case(const std::filesystem::path& path);

/// Parse a file into JSON, rethrowing syntax errors as ScenarioError with
/// the line/column reported by the parser.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace podlab::grid

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "podlab/harness/experiment.hpp"
#include "podlab/harness/studies.hpp"
#include "podlab/modal/modes.hpp"

namespace podlab::harness {

/// Output path could not be written.
class ExportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Columns t, y, u, dw_<machine>... at integrator resolution, 17 digits.
void write_series_csv(std::ostream& os, const ExperimentResult& r);
/// Columns t, y, average, d, q, innovation, u, one row per controller tick.
void write_ticks_csv(std::ostream& os, const ExperimentResult& r);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    /// Throws std::out_of_range for an unknown column.
    const std::vector<double>& column(const std::string& name) const;
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Numeric CSV with a header row. Throws ScenarioError with the line number
/// on malformed input.
CsvTable read_csv(std::istream& is);

/// Metrics recomputed from exported series and ticks tables.
CostPerformance metrics_from_csv(const CsvTable& series, const CsvTable& ticks);

nlohmann::json summary_json(const ExperimentResult& r);
nlohmann::json modes_json(const std::vector<modal::ModeInfo>& modes);
nlohmann::json gain_sweep_json(const GainSweepResult& s);
nlohmann::json sweep_grid_json(const SweepGrid& g);

/// Writes <stem>_series.csv, <stem>_ticks.csv and <stem>.json into `dir`,
/// creating it if needed.
void export_result(const ExperimentResult& r, const std::filesystem::path& dir, const std::string& stem);
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace podlab::harness

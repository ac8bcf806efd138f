#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pcbf/simulator.hpp"

namespace pcbf {

/// Column names of the run CSV, in order, for a robot with `dof` joints and a
/// `task_dim` task space.
std::vector<std::string> log_columns(int dof, int task_dim);

void write_log_csv(const RunLog& log, std::ostream& out);

/// Min-h table, violation counts, passivity statistics. Contains no timing
/// data, so reruns produce identical files.
nlohmann::json summary_json(const RunLog& log);

/// QP solve-time statistics.
nlohmann::json timing_json(const RunLog& log);

struct PlotSeries {
  std::string name;
  std::vector<double> values;
  std::string color;
};

struct PlotPanel {
  std::string ylabel;
  std::vector<PlotSeries> series;
  bool zero_line = false;
};

/// Stacked line plots sharing the time axis [t.front(), t.back()].
std::string svg_plot(const std::string& title, const std::vector<double>& t, const std::vector<PlotPanel>& panels);

/// Writes log.csv, summary.json, timing.json, barriers.svg,
/// manipulability.svg and passivity.svg into `dir` (created if needed).
void emit_outputs(const RunLog& log, const std::filesystem::path& dir);

}  // namespace pcbf

#pragma once

// Result rows and their serialized forms: fixed-column CSV, JSON lines, a
// human-readable comparison table, and SVG line plots with CSV twins.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ulbench/metrics.hpp"

namespace ulbench {

struct MetricsReport {
  std::string method_id;
  std::string scenario;  // scenario kind string
  std::optional<int> target_class;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;  // populated when ok == false

  double ta = 0.0, ra = 0.0, fa_raw = 0.0, fa_disc = 0.0;
  std::map<std::string, double> mia;  // feature kind -> efficacy percent
  double l2 = 0.0;
  double rte_ratio = 0.0;
  std::uint64_t storage_bytes = 0;
  double wall_seconds = 0.0;
  std::optional<double> asr;  // depoisoning only
  bool duplicate = false;

  std::string cell_key() const;  // method|scenario|budget|seed
};

// Fixed CSV column order; numbers round-trip exactly through parse_csv_row.
const std::string& report_csv_header();
std::string to_csv_row(const MetricsReport& r);
MetricsReport parse_csv_row(const std::string& line);

std::string to_jsonl(const MetricsReport& r);
MetricsReport from_jsonl(const std::string& line);

// One row per method for the given scenario; Retrain first as the reference.
// If no retrain row exists the reference column is blanked and a warning
// line is included.
std::string emit_table(const std::vector<MetricsReport>& rows,
                       const std::string& scenario);

// Minimal hand-rolled SVG line chart. One polyline per series.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);
// CSV twin: x,<label1>,<label2>,... with one row per distinct x.
void write_plot_csv(const std::filesystem::path& path,
                    const std::vector<PlotSeries>& series);

}  // namespace ulbench

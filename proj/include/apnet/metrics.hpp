#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "apnet/diagnostics.hpp"
#include "apnet/simulation.hpp"

namespace apnet {

struct ChannelReport {
  std::string channel;
  bool adaptive = false;
  NominalBoundInputs nominal_inputs;
  std::optional<NominalBound> nominal;
  std::optional<AdaptiveBounds> bounds;
  std::vector<BoundCheck> checks;
  std::optional<double> lyapunov_cutoff;
  long outside_samples = 0;     // samples with ||e_s|| > eta1 or ||dtilde|| > eta2
  long outside_decreasing = 0;  // of those, samples with dV/dt < 0
  long post_cutoff_increases = 0;
  double max_rms_e_x = kNaN;    // post-cutoff max of ||e_x|| / sqrt(N)
  double final_e_x = kNaN, final_e_z = kNaN, final_delta_tilde = kNaN, final_consensus_error = kNaN;

  double outside_fraction() const {
    return outside_samples > 0 ? static_cast<double>(outside_decreasing) / static_cast<double>(outside_samples)
                               : kNaN;
  }
};

struct DwellReport {
  Point2 position = Point2::Zero();
  double start = 0.0, end = 0.0;
  int sensors_within = 0;  // at the end of the dwell, within dwell_radius
  double cost_start = kNaN, cost_end = kNaN, cost_peak = kNaN;
  double normalized_start = kNaN, normalized_end = kNaN;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  long steps = 0;
  double sim_time = 0.0;
  std::vector<ChannelReport> channels;
  std::vector<DwellReport> dwells;
  double dwell_radius = 2.0;
  double final_coverage_cost = kNaN;
  double final_normalized_cost = kNaN;
  double final_centroid_cost = kNaN;
  long projection_clamps = 0;
  bool bounds_satisfied = true;
};

/// Bound monitors and summary statistics over a finished (or partial) run.
RunReport evaluate_run(const Simulation& sim, double dwell_radius = 2.0);

nlohmann::json report_json(const RunReport& report);

std::vector<std::string> trace_csv_header(const Trace& trace);
void write_trace_csv(const Trace& trace, const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::string& path);

/// trace.csv, summary.json, frames/ (when recorded) and commands.jsonl (when
/// commands were ingested) under `dir`. Throws IoError.
void export_metrics(const Simulation& sim, const RunReport& report, const std::string& dir,
                    double wall_seconds = kNaN);

}  // namespace apnet

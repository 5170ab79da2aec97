#pragma once

// Experiment runner: executes a validated configuration end to end and writes
// a self-describing output directory — result CSVs plus a manifest carrying
// the full configuration and the SHA-256 of every artifact.  Outputs are a
// pure function of the configuration; the worker count never changes a byte.

#include <string>
#include <vector>

#include "mvsde/config.hpp"

namespace mvsde {

struct RunResult {
  std::string output_dir;
  std::string manifest_path;
  std::vector<std::string> files;  // artifact names relative to output_dir
};

RunResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

// Metric dispatch shared by the runner and the command line: w1/w2/wp pick the
// 1D quantile form, the exact assignment solver, or entropic transport by
// dimension and size; wpsi/tv/entropy route to their estimators.
double evaluate_metric(const MetricConfig& mc, const EmpiricalMeasure& a,
                       const EmpiricalMeasure& b);

struct DiffEntry {
  std::string file;
  std::string key;        // metric / statistic / column the difference belongs to
  double max_abs_diff = 0.0;
  double tolerance = 0.0;  // declared tolerance or noise band; 0 when informational
  bool within_noise = false;
  bool flagged = false;    // exceeded a declared tolerance or the noise band
};

struct CompareReport {
  std::vector<DiffEntry> entries;
  bool identical = true;   // every shared artifact hashed equal
  bool any_flagged = false;
};

// Compares two run directories through their manifests: identical hashes are
// skipped, numeric columns are diffed per metric/statistic group.  Differences
// within 3x the recorded noise floor are never flagged (seed replication lands
// there by construction); beyond the band a declared tolerance decides, and
// lacking one the band itself does.  Everything else is informational.
CompareReport compare_runs(const std::string& manifest_a, const std::string& manifest_b);

}  // namespace mvsde

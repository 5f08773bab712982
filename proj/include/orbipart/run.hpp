#ifndef ORBIPART_RUN_HPP
#define ORBIPART_RUN_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace orbipart {

enum class RunMode { Scalar, System, Partition, VerifyAll };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct RunConfig {
  int m = 2;
  int n = 2;
  int M = 2;
  RunMode mode = RunMode::VerifyAll;
  int K = 512;
  double grading = 0.0;  // 0 = per-symmetry default
  std::vector<double> lambda_schedule = {-1.0, -10.0, -100.0, -1000.0};
  double scalar_a = 0.0;              // scalar-mode interval
  double scalar_b = 0.0;              // 0 = pi
  std::map<std::string, double> tolerances;
  std::string output_dir = "out";
  unsigned seed = 0;
};

/// Parses flags (optionally over a JSON config file given by --config);
/// flags override file values. Throws std::invalid_argument listing every
/// violated constraint.
RunConfig parse_config(const std::vector<std::string>& args);

struct RunReport {
  bool all_verifications_pass = true;
  std::string report_json;  // serialized report (also written to disk)
};

/// Executes the configured pipeline, writes report.json, plotdata.csv and
/// one CSV per component profile into the output directory, and returns the
/// report. The process exit code should be 0 iff all verifications passed.
RunReport run(const RunConfig& config);

}  // namespace orbipart

#endif

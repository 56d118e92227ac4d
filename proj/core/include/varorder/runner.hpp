#pragma once

#include <string>

namespace varorder {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kDrawsFormatVersion = 1;

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitPartialFailure = 4;

struct AnalyzeOptions {
  double beta = -1.0;        // < 0: keep the fitted run's beta
  int k_components = -1;     // < 0: keep the fitted run's k
  bool granger = true;
  bool decompose = true;
  std::string regions_path;  // optional node metadata for the DOT graph
};

/// Commands return process exit codes and write human-readable errors to
/// stderr. Timing goes to stderr only, keeping every output file
/// byte-reproducible from (inputs, config, seed).
int cmd_simulate(const std::string& spec_path, const std::string& out_dir);
int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& out_dir);
int cmd_analyze(const std::string& run_dir, const AnalyzeOptions& options);
int cmd_study(const std::string& config_path, const std::string& out_dir);
int cmd_diagnose(const std::string& run_dir);

}  // namespace varorder

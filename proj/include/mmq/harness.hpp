#pragma once

// Experiment orchestration behind the CLI: analytic reports, simulation runs,
// heavy-traffic sweeps and validation suites. Every command is a pure function
// of (config, seed) and returns its JSON report and long-format CSV.

#include <json.hpp>

#include <string>
#include <vector>

#include "mmq/config.hpp"

namespace mmq {

/// Stable exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitModel = 3, kExitValidation = 4 };

/// Long-format CSV: run_id,quantity,class,state,value,half_width. Class and
/// state are 0-based and left empty when not applicable.
class CsvTable {
 public:
  static constexpr const char* kHeader = "run_id,quantity,class,state,value,half_width";

  void add(const std::string& run_id, const std::string& quantity, int cls, int state, double value,
           double half_width = 0.0);
  void append(const CsvTable& other);
  std::string str() const;
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> rows_;
};

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  CsvTable csv;
};

CommandResult cmd_analyze(const ExperimentConfig& cfg);
CommandResult cmd_simulate(const ExperimentConfig& cfg);
CommandResult cmd_ht_sweep(const ExperimentConfig& cfg);
CommandResult cmd_validate(const ExperimentConfig& cfg);

CommandResult run_mode(Mode mode, const ExperimentConfig& cfg);

/// Writes <dir>/<name>.<mode>.json and, when non-empty, <dir>/<name>.<mode>.csv.
/// Returns the paths written.
std::vector<std::string> write_outputs(const ExperimentConfig& cfg, Mode mode, const CommandResult& result);

/// Heavy-traffic horizon for index N: horizon_n2 * N^2 when configured, else the plain horizon.
double sweep_horizon(const ExperimentConfig& cfg, double n);

/// Number formatting used in CSV and stdout (shortest round-trip form is not
/// needed; 12 significant digits, locale-independent).
std::string format_number(double value);

}  // namespace mmq

#pragma once

// JSON experiment configuration. The schema is documented in
// docs/config-schema.md.

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmq/dps.hpp"
#include "mmq/workload.hpp"

namespace mmq {

enum class Mode { Analyze, Simulate, HtSweep, Validate };

std::optional<Mode> parse_mode(const std::string& name);
std::string to_string(Mode mode);

using AnyModel = std::variant<ModelSpec<double>, DpsSpec<double>>;

/// Workload view of either model kind (a DPS spec carries its mixture model).
const ModelSpec<double>& workload_model(const AnyModel& model);

struct ExperimentConfig {
  std::string name = "run";
  AnyModel model;
  std::optional<Mode> mode{};
  std::optional<VectorXd> p0{};
  double p0_tolerance = 1e-3;

  std::vector<double> n_values{10, 50, 100, 200};
  double horizon = 1e5;
  std::optional<double> warmup{};      // default: 10% of the horizon
  std::optional<double> horizon_n2{};  // sweeps: horizon = horizon_n2 * N^2
  int batches = 30;
  std::uint64_t seed = 1;
  int replications = 1;
  std::size_t samples = 10000;
  double confidence = 0.95;

  std::optional<VectorXd> check_mu{};  // validate: class rates used by the residual checks
  std::string output_dir = ".";

  bool is_dps() const noexcept { return std::holds_alternative<DpsSpec<double>>(model); }
  const DpsSpec<double>& dps() const { return std::get<DpsSpec<double>>(model); }
  const ModelSpec<double>& workload() const { return workload_model(model); }

  double warmup_for(double horizon_value) const { return warmup.value_or(0.1 * horizon_value); }
};

/// Schema problems raise Error(Errc::Config); an ill-posed model (e.g. a
/// reducible generator) raises the corresponding model error.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

ServiceDistribution<double> parse_service(const nlohmann::json& doc);
nlohmann::json service_to_json(const ServiceDistribution<double>& dist);

}  // namespace mmq

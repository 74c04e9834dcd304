#pragma once

// Event-driven simulation of the modulated workload process and of the
// multi-class exponential DPS queue. Both keep the state exact between events
// (the workload is piecewise linear, queue lengths piecewise constant), so all
// time averages are integrated in closed form.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mmq/dps.hpp"
#include "mmq/estimates.hpp"
#include "mmq/workload.hpp"

namespace mmq {

struct SimConfig {
  double horizon = 1e5;
  double warmup = 1e4;
  int batches = 30;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // replication index
  std::size_t samples = 0;   // equally spaced post-warmup snapshots
  double initial_workload = 0.0;  // workload runs only
};

/// Workload process under per-state Poisson arrivals, requirement
/// distributions and capacities. Requires rho_inf < 1.
SimEstimates simulate_workload(const ModelSpec<double>& m, const SimConfig& cfg);

/// Multi-class DPS queue as a CTMC. Competing clocks are sampled jointly (one
/// exponential for the total rate, then the event type), so simultaneous events
/// cannot occur; the event type is picked in the fixed order
/// arrivals < departures < environment jumps. Requires rho_inf < 1.
SimEstimates simulate_dps(const DpsSpec<double>& spec, const SimConfig& cfg);

/// Runs `replications` independent streams (seed, stream 0..R-1) concurrently
/// and merges them in stream order, so the result does not depend on scheduling.
SimEstimates simulate_workload_replicated(const ModelSpec<double>& m, SimConfig cfg, int replications);
SimEstimates simulate_dps_replicated(const DpsSpec<double>& spec, SimConfig cfg, int replications);

struct ScaledLaw {
  double mean = 0.0;
  double variance = 0.0;
  double ks = 0.0;            // against Exponential(sample mean)
  double ks_reference = 0.0;  // against Exponential(reference mean), if given
  std::size_t count = 0;
  std::size_t lag = 1;
};

/// Law of scale * sample, compared with an exponential. Every `lag`-th sample
/// is kept; at least 1000 must remain.
ScaledLaw estimate_scaled_law(const std::vector<double>& samples, double scale,
                              std::optional<double> reference_mean = std::nullopt, std::size_t lag = 1);

/// Exponential-law critical value of the KS distance at 1% (large-sample).
double ks_critical_1pct(std::size_t n);

/// max_d |E[X | Z=d] - E[X]| / E[X] for each column of `values` (one row per
/// snapshot, states[i] the environment state of row i). The half-width comes
/// from splitting the snapshots into contiguous blocks.
std::vector<Estimate> independence_diagnostic(const MatrixXd& values, const std::vector<int>& states, int dim,
                                              int blocks = 20);

}  // namespace mmq

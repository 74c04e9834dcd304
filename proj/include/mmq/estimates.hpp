#pragma once

// Batch-means estimators shared by the simulators and the residual checks.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmq/types.hpp"

namespace mmq {

/// Point estimate with the half-width of its confidence interval.
struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;

  bool covers(double value, double widths = 1.0) const;
};

/// Two-sided Student-t quantile: P(|T| <= q) = confidence with `dof` degrees of freedom.
double t_quantile(std::size_t dof, double confidence);

/// Batch-means estimate from per-batch averages and batch durations.
Estimate batch_estimate(const Eigen::Ref<const VectorXd>& values, const Eigen::Ref<const VectorXd>& weights,
                        double confidence = 0.95);

/// Output of one or more simulation runs. Each row of the per-batch tables is
/// one batch (time averages over that batch); replications are merged by
/// stacking batches, so any derived functional can be re-evaluated batch by
/// batch to get its own confidence interval.
struct SimEstimates {
  int states = 0;
  int classes = 0;  // 0 for workload runs

  VectorXd batch_weights;  // batch durations
  VectorXd workload;       // W for workload runs, sum_k m_k / mu_k for DPS runs
  MatrixXd p0;             // time fraction {empty, Z = d}
  MatrixXd occupancy;      // time fraction {Z = d}
  MatrixXd m_kd;           // E[M_k 1{Z=d}], column k * states + d
  MatrixXd share_kd;       // E[g_k M_k / sum_j g_j M_j 1{sum M > 0} 1{Z=d}], same layout

  // Post-warmup snapshots taken at equally spaced times.
  std::vector<double> sample_workload;
  std::vector<int> sample_state;
  MatrixXd sample_m;  // one row per snapshot, DPS runs only

  std::uint64_t events = 0;
  double simulated_time = 0.0;

  Eigen::Index batches() const noexcept { return batch_weights.size(); }
  bool has_dps() const noexcept { return classes > 0; }
  Eigen::Index column(int k, int d) const noexcept { return static_cast<Eigen::Index>(k) * states + d; }

  Estimate ew(double confidence = 0.95) const;
  Estimate p0_of(int d, double confidence = 0.95) const;
  Estimate occupancy_of(int d, double confidence = 0.95) const;
  Estimate m_of(int k, int d, double confidence = 0.95) const;
  Estimate share_of(int k, int d, double confidence = 0.95) const;

  /// Batch-means estimate of an arbitrary functional; `f(b)` evaluates it on batch b.
  template <typename F>
  Estimate functional(F&& f, double confidence = 0.95) const {
    VectorXd values(batches());
    for (Eigen::Index b = 0; b < batches(); ++b) values(b) = f(b);
    return batch_estimate(values, batch_weights, confidence);
  }

  /// Exact stationary means in K x D layout (row k, column d).
  MatrixXd m_matrix() const;
  MatrixXd share_matrix() const;
  VectorXd p0_vector() const;

  /// Appends the batches and snapshots of `other` (same model shape).
  void merge(const SimEstimates& other);
};

/// Lag-k sample autocorrelation.
double autocorrelation(const std::vector<double>& x, std::size_t lag);

/// Smallest lag whose autocorrelation drops below `threshold` (capped at n / 10).
std::size_t decorrelation_lag(const std::vector<double>& x, double threshold = 0.1);

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and an
/// exponential law with the given mean.
double ks_to_exponential(std::vector<double> samples, double mean);

/// Pearson correlation.
double correlation(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y);

}  // namespace mmq

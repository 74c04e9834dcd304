#include "mmq/estimates.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>

#include "mmq/error.hpp"

namespace mmq {

bool Estimate::covers(double value, double widths) const {
  return std::abs(mean - value) <= widths * half_width;
}

double t_quantile(std::size_t dof, double confidence) {
  if (dof == 0) throw Error(Errc::TooFewSamples, "t quantile needs at least one degree of freedom");
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

Estimate batch_estimate(const Eigen::Ref<const VectorXd>& values, const Eigen::Ref<const VectorXd>& weights,
                        double confidence) {
  const Eigen::Index n = values.size();
  if (n < 2 || weights.size() != n) {
    throw Error(Errc::TooFewSamples, "batch means need at least two batches");
  }
  const double total = weights.sum();
  const double mean = values.dot(weights) / total;
  // Weighted sample variance of the batch averages; reduces to the usual
  // estimator when all batches have equal length.
  const double var = (weights.array() * (values.array() - mean).square()).sum() / total *
                     static_cast<double>(n) / static_cast<double>(n - 1);
  const double hw = t_quantile(static_cast<std::size_t>(n - 1), confidence) * std::sqrt(var / static_cast<double>(n));
  return {mean, hw};
}

Estimate SimEstimates::ew(double confidence) const { return batch_estimate(workload, batch_weights, confidence); }

Estimate SimEstimates::p0_of(int d, double confidence) const {
  return batch_estimate(p0.col(d), batch_weights, confidence);
}

Estimate SimEstimates::occupancy_of(int d, double confidence) const {
  return batch_estimate(occupancy.col(d), batch_weights, confidence);
}

Estimate SimEstimates::m_of(int k, int d, double confidence) const {
  if (!has_dps()) throw Error(Errc::MissingEstimate, "queue-length estimates need a DPS run");
  return batch_estimate(m_kd.col(column(k, d)), batch_weights, confidence);
}

Estimate SimEstimates::share_of(int k, int d, double confidence) const {
  if (!has_dps()) throw Error(Errc::MissingEstimate, "share estimates need a DPS run");
  return batch_estimate(share_kd.col(column(k, d)), batch_weights, confidence);
}

namespace {

MatrixXd to_class_state(const MatrixXd& table, const VectorXd& weights, int classes, int states) {
  const VectorXd means = table.transpose() * weights / weights.sum();
  MatrixXd out(classes, states);
  for (int k = 0; k < classes; ++k) {
    for (int d = 0; d < states; ++d) out(k, d) = means(static_cast<Eigen::Index>(k) * states + d);
  }
  return out;
}

}  // namespace

MatrixXd SimEstimates::m_matrix() const {
  if (!has_dps()) throw Error(Errc::MissingEstimate, "queue-length estimates need a DPS run");
  return to_class_state(m_kd, batch_weights, classes, states);
}

MatrixXd SimEstimates::share_matrix() const {
  if (!has_dps()) throw Error(Errc::MissingEstimate, "share estimates need a DPS run");
  return to_class_state(share_kd, batch_weights, classes, states);
}

VectorXd SimEstimates::p0_vector() const { return p0.transpose() * batch_weights / batch_weights.sum(); }

namespace {

template <typename M>
M stack(const M& top, const M& bottom) {
  if (top.size() == 0) return bottom;
  if (bottom.size() == 0) return top;
  M out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

void SimEstimates::merge(const SimEstimates& other) {
  if (batches() == 0) {
    *this = other;
    return;
  }
  if (other.states != states || other.classes != classes) {
    throw Error(Errc::InvalidArgument, "cannot merge estimates of differently shaped models");
  }
  batch_weights = stack(batch_weights, other.batch_weights);
  workload = stack(workload, other.workload);
  p0 = stack(p0, other.p0);
  occupancy = stack(occupancy, other.occupancy);
  m_kd = stack(m_kd, other.m_kd);
  share_kd = stack(share_kd, other.share_kd);
  sample_workload.insert(sample_workload.end(), other.sample_workload.begin(), other.sample_workload.end());
  sample_state.insert(sample_state.end(), other.sample_state.begin(), other.sample_state.end());
  sample_m = stack(sample_m, other.sample_m);
  events += other.events;
  simulated_time += other.simulated_time;
}

double autocorrelation(const std::vector<double>& x, std::size_t lag) {
  const std::size_t n = x.size();
  if (lag >= n) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    if (i + lag < n) num += (x[i] - mean) * (x[i + lag] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

std::size_t decorrelation_lag(const std::vector<double>& x, double threshold) {
  const std::size_t cap = std::max<std::size_t>(1, x.size() / 10);
  for (std::size_t lag = 1; lag <= cap; ++lag) {
    if (autocorrelation(x, lag) < threshold) return lag;
  }
  return cap;
}

double ks_to_exponential(std::vector<double> samples, double mean) {
  if (samples.empty()) throw Error(Errc::TooFewSamples, "KS distance of an empty sample");
  if (!(mean > 0.0)) throw Error(Errc::InvalidArgument, "reference exponential mean must be positive");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = samples[i] <= 0.0 ? 0.0 : -std::expm1(-samples[i] / mean);
    dist = std::max({dist, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return dist;
}

double correlation(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y) {
  const VectorXd xc = x.array() - x.mean();
  const VectorXd yc = y.array() - y.mean();
  const double den = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
  return den > 0.0 ? xc.dot(yc) / den : 0.0;
}

}  // namespace mmq

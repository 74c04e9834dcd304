#include "mmq/dps.hpp"

namespace mmq {

namespace {

MatrixXd batch_matrix(const MatrixXd& table, Eigen::Index batch, int classes, int states) {
  MatrixXd out(classes, states);
  for (int k = 0; k < classes; ++k) {
    for (int d = 0; d < states; ++d) out(k, d) = table(batch, static_cast<Eigen::Index>(k) * states + d);
  }
  return out;
}

template <typename Residual>
std::vector<Estimate> batch_residual(const DpsSpec<double>& spec, const SimEstimates& est, const MatrixXd& table,
                                     double confidence, Residual residual) {
  if (!est.has_dps() || est.classes != spec.classes() || est.states != spec.states()) {
    throw Error(Errc::MissingEstimate, "estimates do not contain per-class, per-state DPS expectations");
  }
  MatrixXd per_batch(est.batches(), spec.classes());
  for (Eigen::Index b = 0; b < est.batches(); ++b) {
    per_batch.row(b) = residual(spec, batch_matrix(table, b, est.classes, est.states)).transpose();
  }
  std::vector<Estimate> out;
  for (Eigen::Index k = 0; k < spec.classes(); ++k) {
    out.push_back(batch_estimate(per_batch.col(k), est.batch_weights, confidence));
  }
  return out;
}

}  // namespace

std::vector<Estimate> rate_conservation_residual(const DpsSpec<double>& spec, const SimEstimates& est,
                                                 double confidence) {
  return batch_residual(spec, est, est.share_kd, confidence,
                        [](const DpsSpec<double>& s, const MatrixXd& x) { return rate_conservation_residual(s, x); });
}

std::vector<Estimate> weighted_moment_residual(const DpsSpec<double>& spec, const SimEstimates& est,
                                               double confidence) {
  return batch_residual(spec, est, est.m_kd, confidence,
                        [](const DpsSpec<double>& s, const MatrixXd& x) { return weighted_moment_residual(s, x); });
}

}  // namespace mmq

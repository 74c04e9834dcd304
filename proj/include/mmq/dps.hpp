#pragma once

// Multi-class discriminatory processor sharing (DPS) in a Markov-modulated
// environment: class loads, the heavy-traffic collapse direction and the mean
// of the common exponential factor X, and the stationary identities used as
// residual checks against simulation or exact solutions.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mmq/environment.hpp"
#include "mmq/error.hpp"
#include "mmq/estimates.hpp"
#include "mmq/service.hpp"
#include "mmq/types.hpp"
#include "mmq/workload.hpp"

namespace mmq {

template <typename Scalar>
class DpsSpec {
 public:
  /// alpha is K x D (alpha(k, d) = P(class k | arrival in state d)); mu and g
  /// have one entry per class. Service of class k in state d runs at mu_k c_d.
  static DpsSpec create(GeneratorMatrix<Scalar> q, Vector<Scalar> lambda, Vector<Scalar> capacity,
                        Matrix<Scalar> alpha, Vector<Scalar> mu, Vector<Scalar> g) {
    using std::abs;
    const Eigen::Index classes = alpha.rows();
    if (classes < 1 || alpha.cols() != q.dim() || mu.size() != classes || g.size() != classes) {
      throw Error(Errc::InvalidArgument, "alpha must be K x D with mu and g of length K");
    }
    if ((alpha.array() < Scalar(0)).any()) throw Error(Errc::InvalidArgument, "alpha entries must be >= 0");
    for (Eigen::Index d = 0; d < alpha.cols(); ++d) {
      if (abs(alpha.col(d).sum() - Scalar(1)) > Scalar(1e-12)) {
        throw Error(Errc::WeightsNotNormalized, "class probabilities of state " + std::to_string(d) +
                                                    " do not sum to one");
      }
    }
    if (!(mu.array() > Scalar(0)).all()) throw Error(Errc::InvalidArgument, "class rates mu must be > 0");
    if (!(g.array() > Scalar(0)).all()) throw Error(Errc::InvalidArgument, "DPS weights g must be > 0");
    if (lambda.size() != q.dim()) throw Error(Errc::InvalidArgument, "lambda needs one entry per state");
    for (Eigen::Index k = 0; k < classes; ++k) {
      if (!((alpha.row(k).transpose().array() * lambda.array()) > Scalar(0)).any()) {
        throw Error(Errc::InvalidArgument,
                    "class " + std::to_string(k) + " has zero arrival rate in every environment state");
      }
    }
    std::vector<ServiceDistribution<Scalar>> service;
    service.reserve(static_cast<std::size_t>(q.dim()));
    for (Eigen::Index d = 0; d < q.dim(); ++d) {
      service.push_back(mixture_from_classes<Scalar>(alpha.col(d), mu));
    }
    auto model = ModelSpec<Scalar>::create(std::move(q), std::move(lambda), std::move(capacity), std::move(service));
    return DpsSpec(std::move(model), std::move(alpha), std::move(mu), std::move(g));
  }

  const ModelSpec<Scalar>& model() const noexcept { return model_; }
  Eigen::Index classes() const noexcept { return alpha_.rows(); }
  Eigen::Index states() const noexcept { return alpha_.cols(); }
  const Matrix<Scalar>& alpha() const noexcept { return alpha_; }
  const Vector<Scalar>& mu() const noexcept { return mu_; }
  const Vector<Scalar>& g() const noexcept { return g_; }

  /// lambda_{k,d} = alpha_{k,d} lambda_d, K x D.
  Matrix<Scalar> class_arrival_rates() const { return alpha_ * model_.lambda().asDiagonal(); }

  /// Same classes with arrival rates lambda * factor (factor >= 0).
  DpsSpec scaled(Scalar factor) const {
    return DpsSpec(model_.with_arrival_rates(model_.lambda() * factor), alpha_, mu_, g_);
  }

  /// Same spec with different class rates; the per-state mixtures are rebuilt.
  DpsSpec with_class_rates(Vector<Scalar> mu) const {
    return create(model_.generator(), model_.lambda(), model_.capacity(), alpha_, std::move(mu), g_);
  }

 private:
  DpsSpec(ModelSpec<Scalar> model, Matrix<Scalar> alpha, Vector<Scalar> mu, Vector<Scalar> g)
      : model_(std::move(model)), alpha_(std::move(alpha)), mu_(std::move(mu)), g_(std::move(g)) {}

  ModelSpec<Scalar> model_;
  Matrix<Scalar> alpha_;
  Vector<Scalar> mu_;
  Vector<Scalar> g_;
};

/// lambda_d^(N) = lambda_d / rho_inf (1 - 1/N); n = +infinity gives the critical spec.
template <typename Scalar>
DpsSpec<Scalar> ht_parametrize(const DpsSpec<Scalar>& spec, Scalar n) {
  if (!(n >= Scalar(1))) throw Error(Errc::InvalidArgument, "heavy-traffic index N must be >= 1");
  const Scalar rho = traffic_intensity(spec.model());
  return spec.scaled((Scalar(1) - Scalar(1) / n) / rho);
}

template <typename Scalar>
DpsSpec<Scalar> critical(const DpsSpec<Scalar>& spec) {
  return ht_parametrize(spec, std::numeric_limits<Scalar>::infinity());
}

template <typename Scalar>
struct ClassLoads {
  Vector<Scalar> lambda_k_inf;  // sum_d pi_d lambda_{k,d}
  Vector<Scalar> rho_k_inf;     // lambda_{k,inf} / (mu_k c_inf)
  Vector<Scalar> rho_d;         // c_d^{-1} sum_k lambda_{k,d} / mu_k
};

/// Class loads of `spec`, or of its critical version when `ht` is set.
template <typename Scalar>
ClassLoads<Scalar> class_loads(const DpsSpec<Scalar>& spec, bool ht) {
  const DpsSpec<Scalar> s = ht ? critical(spec) : spec;
  const auto& m = s.model();
  const Matrix<Scalar> lam = s.class_arrival_rates();
  ClassLoads<Scalar> out;
  out.lambda_k_inf = lam * m.pi();
  out.rho_k_inf = out.lambda_k_inf.cwiseQuotient(s.mu()) / m.mean_capacity();
  out.rho_d = (lam.transpose() * s.mu().cwiseInverse()).cwiseQuotient(m.capacity());
  return out;
}

template <typename Scalar>
struct CollapsePrediction {
  Vector<Scalar> direction;  // rho_hat_k / g_k
  ExponentialLaw<Scalar> x_law;
  Vector<Scalar> per_state_weights;  // pi

  /// Limit of E[M_k 1{Z=d}] / N, K x D.
  Matrix<Scalar> per_state_means() const {
    return direction * per_state_weights.transpose() * x_law.mean;
  }
  /// Limit of E[M_k] / N.
  Vector<Scalar> class_means() const { return direction * x_law.mean; }
};

/// Heavy-traffic limit (1/N) M^(N) -> direction * X with X exponential.
///
/// E X = [c_inf sum_k rho_k / mu_k - sum_d c_d pi_d a_d (1 - rho_d)]
///       / [c_inf sum_k rho_k / (g_k mu_k)],   Q a = c (1 - rho_d) elementwise,
/// with hatted loads. This is the workload limit divided by
/// sum_k rho_k / (g_k mu_k); for c_inf = 1 it is the familiar form without the
/// leading c_inf.
template <typename Scalar>
CollapsePrediction<Scalar> collapse_prediction(const DpsSpec<Scalar>& spec) {
  using std::abs;
  const auto loads = class_loads(spec, false);
  if (abs(loads.rho_k_inf.sum() - Scalar(1)) > Scalar(1e-9)) {
    throw Error(Errc::NotCritical, "collapse prediction needs a spec at critical load");
  }
  const auto& m = spec.model();
  const Scalar c_inf = m.mean_capacity();
  const Vector<Scalar> slack = m.capacity().cwiseProduct((Vector<Scalar>::Ones(spec.states()) - loads.rho_d));
  const Vector<Scalar> a = solve_offset_vector(m.generator(), m.stationary(), slack);

  const Scalar service_term = c_inf * loads.rho_k_inf.cwiseQuotient(spec.mu()).sum();
  const Scalar env_term = (m.pi().array() * a.array() * slack.array()).sum();
  const Scalar weight_term = c_inf * loads.rho_k_inf.cwiseQuotient(spec.g().cwiseProduct(spec.mu())).sum();
  const Scalar ex = (service_term - env_term) / weight_term;
  if (!(ex > Scalar(0))) throw Error(Errc::SolveFailed, "E X is not positive");

  return {loads.rho_k_inf.cwiseQuotient(spec.g()), ExponentialLaw<Scalar>{ex}, m.pi()};
}

/// Workload limit implied by the collapse: W_hat = sum_k M_hat_k / mu_k = X sum_k rho_k / (g_k mu_k).
template <typename Scalar>
ExponentialLaw<Scalar> ht_workload_from_collapse(const CollapsePrediction<Scalar>& pred,
                                                 const DpsSpec<Scalar>& spec) {
  return {pred.x_law.mean * pred.direction.cwiseQuotient(spec.mu()).sum()};
}

/// residual_k = lambda_{k,inf} - sum_d mu_k c_d E[g_k M_k / sum_j g_j M_j 1{sum M > 0} 1{Z=d}].
/// `share` is K x D.
template <typename Scalar>
Vector<Scalar> rate_conservation_residual(const DpsSpec<Scalar>& spec, const Matrix<Scalar>& share) {
  if (share.rows() != spec.classes() || share.cols() != spec.states()) {
    throw Error(Errc::MissingEstimate, "share expectations must be K x D");
  }
  const auto& m = spec.model();
  const Vector<Scalar> lambda_inf = spec.class_arrival_rates() * m.pi();
  return lambda_inf - spec.mu().cwiseProduct(share * m.capacity());
}

/// residual_k = sum_d c_d E[M_k 1_d] - lambda_{k,inf} / mu_k
///   - sum_{d,j} g_j (lambda_{k,d} E[M_j 1_d] + lambda_{j,d} E[M_k 1_d]) / (mu_k g_k + mu_j g_j).
/// `moments` is K x D.
template <typename Scalar>
Vector<Scalar> weighted_moment_residual(const DpsSpec<Scalar>& spec, const Matrix<Scalar>& moments) {
  if (moments.rows() != spec.classes() || moments.cols() != spec.states()) {
    throw Error(Errc::MissingEstimate, "queue-length expectations must be K x D");
  }
  const auto& m = spec.model();
  const Matrix<Scalar> lam = spec.class_arrival_rates();
  const Vector<Scalar>& mu = spec.mu();
  const Vector<Scalar>& g = spec.g();
  const Eigen::Index classes = spec.classes();

  Vector<Scalar> residual = moments * m.capacity() - (lam * m.pi()).cwiseQuotient(mu);
  for (Eigen::Index k = 0; k < classes; ++k) {
    Scalar coupling = 0;
    for (Eigen::Index j = 0; j < classes; ++j) {
      const Scalar cross = lam.row(k).dot(moments.row(j)) + lam.row(j).dot(moments.row(k));
      coupling += g(j) * cross / (mu(k) * g(k) + mu(j) * g(j));
    }
    residual(k) -= coupling;
  }
  return residual;
}

/// Batch-wise versions: each residual comes with the half-width of its
/// batch-means confidence interval.
std::vector<Estimate> rate_conservation_residual(const DpsSpec<double>& spec, const SimEstimates& est,
                                                 double confidence = 0.95);
std::vector<Estimate> weighted_moment_residual(const DpsSpec<double>& spec, const SimEstimates& est,
                                               double confidence = 0.95);

/// Classes whose exponential requirement rate depends on the arrival state
/// (mu_kd(k, d) fixed at arrival), before rewriting them as K * D classes.
template <typename Scalar>
struct ModulatedClassSpec {
  GeneratorMatrix<Scalar> q;
  Vector<Scalar> lambda;
  Vector<Scalar> capacity;
  Matrix<Scalar> alpha;  // K x D
  Matrix<Scalar> mu_kd;  // K x D
  Vector<Scalar> g;      // K
};

/// Rewrites state-dependent requirements as K * D plain classes. Class (k, d)
/// has index k * D + d, receives lambda_{k,d} only in state d, requirement
/// rate mu_kd(k, d) and weight g_k.
template <typename Scalar>
DpsSpec<Scalar> split_to_classes(const ModulatedClassSpec<Scalar>& in) {
  const Eigen::Index classes = in.alpha.rows();
  const Eigen::Index states = in.alpha.cols();
  if (in.mu_kd.rows() != classes || in.mu_kd.cols() != states || in.g.size() != classes) {
    throw Error(Errc::InvalidArgument, "mu_kd must be K x D and g of length K");
  }
  const Eigen::Index split = classes * states;
  Matrix<Scalar> alpha = Matrix<Scalar>::Zero(split, states);
  Vector<Scalar> mu(split);
  Vector<Scalar> g(split);
  for (Eigen::Index k = 0; k < classes; ++k) {
    for (Eigen::Index d = 0; d < states; ++d) {
      const Eigen::Index idx = k * states + d;
      alpha(idx, d) = in.alpha(k, d);
      mu(idx) = in.mu_kd(k, d);
      g(idx) = in.g(k);
    }
  }
  return DpsSpec<Scalar>::create(in.q, in.lambda, in.capacity, std::move(alpha), std::move(mu), std::move(g));
}

}  // namespace mmq

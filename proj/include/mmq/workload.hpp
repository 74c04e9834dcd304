#pragma once

// Closed-form workload quantities of the Markov-modulated single-server
// queue: traffic intensity, the offset vector a, the exact mean workload
// given the per-state empty probabilities, and the heavy-traffic limit.

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mmq/environment.hpp"
#include "mmq/error.hpp"
#include "mmq/service.hpp"
#include "mmq/types.hpp"

namespace mmq {

template <typename Scalar>
class ModelSpec {
 public:
  /// lambda: arrival rate per state (>= 0); capacity: service speed per state
  /// (> 0); service: requirement distribution of customers arriving in each state.
  static ModelSpec create(GeneratorMatrix<Scalar> q, Vector<Scalar> lambda, Vector<Scalar> capacity,
                          std::vector<ServiceDistribution<Scalar>> service) {
    const Eigen::Index n = q.dim();
    if (lambda.size() != n || capacity.size() != n || static_cast<Eigen::Index>(service.size()) != n) {
      throw Error(Errc::InvalidArgument, "lambda, c and service must have one entry per environment state");
    }
    if (!(lambda.array() >= Scalar(0)).all()) throw Error(Errc::InvalidArgument, "arrival rates must be >= 0");
    if (!(capacity.array() > Scalar(0)).all()) throw Error(Errc::InvalidArgument, "capacities must be > 0");
    auto pi = stationary_distribution(q);
    return ModelSpec(std::move(q), std::move(pi), std::move(lambda), std::move(capacity), std::move(service));
  }

  Eigen::Index dim() const noexcept { return q_.dim(); }
  const GeneratorMatrix<Scalar>& generator() const noexcept { return q_; }
  const StationaryDistribution<Scalar>& stationary() const noexcept { return pi_; }
  const Vector<Scalar>& pi() const noexcept { return pi_.pi; }
  const Vector<Scalar>& lambda() const noexcept { return lambda_; }
  const Vector<Scalar>& capacity() const noexcept { return capacity_; }
  const std::vector<ServiceDistribution<Scalar>>& service() const noexcept { return service_; }
  const Vector<Scalar>& h1() const noexcept { return h1_; }
  const Vector<Scalar>& h2() const noexcept { return h2_; }

  /// Environment-averaged capacity c_inf.
  Scalar mean_capacity() const { return pi_.pi.dot(capacity_); }

  ModelSpec with_arrival_rates(Vector<Scalar> lambda) const {
    if (lambda.size() != dim() || !(lambda.array() >= Scalar(0)).all()) {
      throw Error(Errc::InvalidArgument, "arrival rates must be >= 0, one per state");
    }
    ModelSpec copy = *this;
    copy.lambda_ = std::move(lambda);
    return copy;
  }

 private:
  ModelSpec(GeneratorMatrix<Scalar> q, StationaryDistribution<Scalar> pi, Vector<Scalar> lambda,
            Vector<Scalar> capacity, std::vector<ServiceDistribution<Scalar>> service)
      : q_(std::move(q)),
        pi_(std::move(pi)),
        lambda_(std::move(lambda)),
        capacity_(std::move(capacity)),
        service_(std::move(service)),
        h1_(q_.dim()),
        h2_(q_.dim()) {
    for (Eigen::Index d = 0; d < q_.dim(); ++d) {
      const auto mom = moments(service_[static_cast<std::size_t>(d)]);
      h1_(d) = mom.first;
      h2_(d) = mom.second;
    }
  }

  GeneratorMatrix<Scalar> q_;
  StationaryDistribution<Scalar> pi_;
  Vector<Scalar> lambda_;
  Vector<Scalar> capacity_;
  std::vector<ServiceDistribution<Scalar>> service_;
  Vector<Scalar> h1_;
  Vector<Scalar> h2_;
};

/// rho_inf = sum_d pi_d lambda_d h_d1 / c_inf.
template <typename Scalar>
Scalar traffic_intensity(const ModelSpec<Scalar>& m) {
  return m.pi().dot(m.lambda().cwiseProduct(m.h1())) / m.mean_capacity();
}

/// Arrival rates scaled to lambda_d / rho_inf * (1 - 1/n), so the result has
/// traffic intensity 1 - 1/n. n may be +infinity (the critical model).
template <typename Scalar>
ModelSpec<Scalar> ht_parametrize(const ModelSpec<Scalar>& m, Scalar n) {
  if (!(n >= Scalar(1))) throw Error(Errc::InvalidArgument, "heavy-traffic index N must be >= 1");
  const Scalar rho = traffic_intensity(m);
  if (!(rho > Scalar(0))) throw Error(Errc::InvalidArgument, "cannot parametrize a model without arrivals");
  const Scalar factor = Scalar(1) - Scalar(1) / n;
  return m.with_arrival_rates(m.lambda() * (factor / rho));
}

/// Model at the critical load (hatted parameters, traffic intensity 1).
template <typename Scalar>
class HtModelSpec {
 public:
  /// Rescales the arrival rates of `m` to lambda / rho_inf.
  static HtModelSpec from(const ModelSpec<Scalar>& m) {
    return HtModelSpec(ht_parametrize(m, std::numeric_limits<Scalar>::infinity()));
  }

  /// Accepts a model that is already critical (|rho_inf - 1| <= 1e-9).
  static HtModelSpec from_critical(ModelSpec<Scalar> m) {
    using std::abs;
    if (abs(traffic_intensity(m) - Scalar(1)) > Scalar(1e-9)) {
      throw Error(Errc::NotCritical, "model is not at critical load");
    }
    return HtModelSpec(std::move(m));
  }

  const ModelSpec<Scalar>& base() const noexcept { return base_; }

 private:
  explicit HtModelSpec(ModelSpec<Scalar> m) : base_(std::move(m)) {}

  ModelSpec<Scalar> base_;
};

/// b_d = c_d - lambda_d h_d1 - c_inf (1 - rho_inf); orthogonal to pi.
template <typename Scalar>
Vector<Scalar> qa_rhs(const ModelSpec<Scalar>& m) {
  const Scalar slack = m.mean_capacity() * (Scalar(1) - traffic_intensity(m));
  Vector<Scalar> b = m.capacity() - m.lambda().cwiseProduct(m.h1());
  b.array() -= slack;
  return b;
}

/// The anchored solution a (a_0 = 0) of Q a = qa_rhs(m).
template <typename Scalar>
Vector<Scalar> offset_vector(const ModelSpec<Scalar>& m) {
  return solve_offset_vector(m.generator(), m.stationary(), qa_rhs(m));
}

/// The mean workload is affine in the empty-probability vector p0:
///   E W = (constant + coefficients . p0) / (c_inf (1 - rho_inf)).
/// This holds the pieces so simulation batches can be pushed through cheaply.
template <typename Scalar>
class MeanWorkloadFormula {
 public:
  MeanWorkloadFormula(const ModelSpec<Scalar>& m, Vector<Scalar> a)
      : rho_(mmq::traffic_intensity(m)), a_(std::move(a)) {
    const auto& pi = m.pi();
    const Vector<Scalar> drift = m.lambda().cwiseProduct(m.h1()) - m.capacity();
    constant_ = (pi.array() * m.lambda().array() * m.h2().array() / Scalar(2)).sum() +
                (a_.array() * pi.array() * drift.array()).sum();
    coefficients_ = m.capacity().cwiseProduct(a_);
    denominator_ = m.mean_capacity() * (Scalar(1) - rho_);
  }

  explicit MeanWorkloadFormula(const ModelSpec<Scalar>& m) : MeanWorkloadFormula(m, offset_vector(m)) {}

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& p0) const {
    return (constant_ + coefficients_.dot(p0)) / denominator_;
  }

  const Vector<Scalar>& offset() const noexcept { return a_; }
  Scalar traffic_intensity() const noexcept { return rho_; }

 private:
  Scalar rho_;
  Vector<Scalar> a_;
  Scalar constant_{};
  Vector<Scalar> coefficients_;
  Scalar denominator_{};
};

/// Exact mean workload given p0_d = P(W = 0, Z = d), typically a simulation
/// estimate. `tolerance` bounds the violation of sum_d p0_d c_d / c_inf = 1 - rho_inf
/// (and of p0_d <= pi_d).
template <typename Scalar, typename Derived>
Scalar mean_workload(const ModelSpec<Scalar>& m, const Eigen::MatrixBase<Derived>& p0,
                     Scalar tolerance = Scalar(1e-3)) {
  using std::abs;
  const Scalar rho = traffic_intensity(m);
  if (!(rho < Scalar(1))) throw Error(Errc::Unstable, "mean workload requires rho_inf < 1");
  if (p0.size() != m.dim()) throw Error(Errc::InvalidArgument, "p0 needs one entry per environment state");
  if ((p0.array() < -tolerance).any() || (p0.array() > m.pi().array() + tolerance).any()) {
    throw Error(Errc::EmptyProbInconsistent, "p0_d must lie in [0, pi_d]");
  }
  const Scalar identity = p0.dot(m.capacity()) / m.mean_capacity();
  if (abs(identity - (Scalar(1) - rho)) > tolerance) {
    throw Error(Errc::EmptyProbInconsistent, "sum_d p0_d c_d / c_inf differs from 1 - rho_inf");
  }
  return MeanWorkloadFormula<Scalar>(m)(p0);
}

/// Anchored a solving [Q a]_d = c_d - lambda_hat_d h_d1.
template <typename Scalar>
Vector<Scalar> ht_offset_vector(const HtModelSpec<Scalar>& hm) {
  const auto& m = hm.base();
  return solve_offset_vector(m.generator(), m.stationary(),
                             Vector<Scalar>(m.capacity() - m.lambda().cwiseProduct(m.h1())));
}

/// lim (1/N) E W^(N) = (1/c_inf) sum_d pi_d [lambda_hat_d h_d2 / 2 + a_d (lambda_hat_d h_d1 - c_d)].
template <typename Scalar>
Scalar ht_mean_workload(const HtModelSpec<Scalar>& hm) {
  const auto& m = hm.base();
  const Vector<Scalar> a = ht_offset_vector(hm);
  const auto lam = m.lambda().array();
  const Scalar sum = (m.pi().array() * (lam * m.h2().array() / Scalar(2) +
                                        a.array() * (lam * m.h1().array() - m.capacity().array())))
                         .sum();
  return sum / m.mean_capacity();
}

template <typename Scalar>
struct ExponentialLaw {
  Scalar mean;

  Scalar variance() const { return mean * mean; }
  Scalar cdf(Scalar x) const {
    using std::exp;
    return x <= Scalar(0) ? Scalar(0) : Scalar(1) - exp(-x / mean);
  }
};

/// Limit law of W^(N) / N: exponential with the heavy-traffic mean.
template <typename Scalar>
ExponentialLaw<Scalar> ht_workload_law(const HtModelSpec<Scalar>& hm) {
  const Scalar mean = ht_mean_workload(hm);
  if (!(mean > Scalar(0))) throw Error(Errc::SolveFailed, "heavy-traffic mean workload is not positive");
  return {mean};
}

}  // namespace mmq

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "mmq/error.hpp"
#include "mmq/rng.hpp"
#include "mmq/types.hpp"

namespace mmq {

template <typename Scalar>
struct Exponential {
  Scalar rate;
};

template <typename Scalar>
struct HyperExponential {
  Vector<Scalar> weights;
  Vector<Scalar> rates;
};

template <typename Scalar>
struct Deterministic {
  Scalar value;
};

/// Service-requirement distribution of a customer arriving in a given
/// environment state. Construct through the named factories, which validate.
template <typename Scalar>
class ServiceDistribution {
 public:
  using Variant = std::variant<Exponential<Scalar>, HyperExponential<Scalar>, Deterministic<Scalar>>;

  static ServiceDistribution exponential(Scalar rate) {
    if (!(rate > Scalar(0)) || !std::isfinite(static_cast<double>(rate))) {
      throw Error(Errc::InvalidArgument, "exponential rate must be positive and finite");
    }
    return ServiceDistribution(Exponential<Scalar>{rate});
  }

  static ServiceDistribution hyperexponential(Vector<Scalar> weights, Vector<Scalar> rates) {
    using std::abs;
    if (weights.size() == 0 || weights.size() != rates.size()) {
      throw Error(Errc::InvalidArgument, "hyperexponential needs matching, non-empty weight and rate vectors");
    }
    if ((weights.array() < Scalar(0)).any() || abs(weights.sum() - Scalar(1)) > Scalar(1e-12)) {
      throw Error(Errc::WeightsNotNormalized, "hyperexponential weights must form a probability vector");
    }
    if (!(rates.array() > Scalar(0)).all()) {
      throw Error(Errc::InvalidArgument, "hyperexponential rates must be positive");
    }
    return ServiceDistribution(HyperExponential<Scalar>{std::move(weights), std::move(rates)});
  }

  static ServiceDistribution deterministic(Scalar value) {
    if (!(value > Scalar(0)) || !std::isfinite(static_cast<double>(value))) {
      throw Error(Errc::InvalidArgument, "deterministic service requirement must be positive and finite");
    }
    return ServiceDistribution(Deterministic<Scalar>{value});
  }

  const Variant& kind() const noexcept { return kind_; }

  template <typename Visitor>
  decltype(auto) visit(Visitor&& v) const {
    return std::visit(std::forward<Visitor>(v), kind_);
  }

 private:
  explicit ServiceDistribution(Variant kind) : kind_(std::move(kind)) {}

  Variant kind_;
};

template <typename Scalar>
struct Moments {
  Scalar first;   // h1, time
  Scalar second;  // h2, time^2
};

template <typename Scalar>
Moments<Scalar> moments(const ServiceDistribution<Scalar>& dist) {
  struct {
    Moments<Scalar> operator()(const Exponential<Scalar>& e) const {
      return {Scalar(1) / e.rate, Scalar(2) / (e.rate * e.rate)};
    }
    Moments<Scalar> operator()(const HyperExponential<Scalar>& h) const {
      const auto inv = h.rates.array().inverse();
      return {(h.weights.array() * inv).sum(), Scalar(2) * (h.weights.array() * inv.square()).sum()};
    }
    Moments<Scalar> operator()(const Deterministic<Scalar>& d) const { return {d.value, d.value * d.value}; }
  } visitor;
  return dist.visit(visitor);
}

/// Laplace-Stieltjes transform E[exp(-s B)], s >= 0.
template <typename Scalar>
Scalar lst(const ServiceDistribution<Scalar>& dist, Scalar s) {
  if (!(s >= Scalar(0))) throw Error(Errc::InvalidArgument, "LST argument must be non-negative");
  struct {
    Scalar s;
    Scalar operator()(const Exponential<Scalar>& e) const { return e.rate / (e.rate + s); }
    Scalar operator()(const HyperExponential<Scalar>& h) const {
      return (h.weights.array() * h.rates.array() / (h.rates.array() + s)).sum();
    }
    Scalar operator()(const Deterministic<Scalar>& d) const {
      using std::exp;
      return exp(-s * d.value);
    }
  } visitor{s};
  return dist.visit(visitor);
}

/// P(B <= x).
template <typename Scalar>
Scalar cdf(const ServiceDistribution<Scalar>& dist, Scalar x) {
  using std::exp;
  if (x < Scalar(0)) return Scalar(0);
  struct {
    Scalar x;
    Scalar operator()(const Exponential<Scalar>& e) const { return Scalar(1) - exp(-e.rate * x); }
    Scalar operator()(const HyperExponential<Scalar>& h) const {
      return Scalar(1) - (h.weights.array() * (-h.rates.array() * x).exp()).sum();
    }
    Scalar operator()(const Deterministic<Scalar>& d) const { return x >= d.value ? Scalar(1) : Scalar(0); }
  } visitor{x};
  return dist.visit(visitor);
}

inline double sample(const ServiceDistribution<double>& dist, Rng& rng) {
  struct {
    Rng& rng;
    double operator()(const Exponential<double>& e) const { return rng.exponential(e.rate); }
    double operator()(const HyperExponential<double>& h) const {
      double u = rng.uniform();
      Eigen::Index branch = h.weights.size() - 1;
      for (Eigen::Index i = 0; i + 1 < h.weights.size(); ++i) {
        u -= h.weights(i);
        if (u <= 0.0) {
          branch = i;
          break;
        }
      }
      return rng.exponential(h.rates(branch));
    }
    double operator()(const Deterministic<double>& d) const { return d.value; }
  } visitor{rng};
  return dist.visit(visitor);
}

/// Requirement of an arbitrary customer arriving in one environment state when
/// class k (exponential, rate mus[k]) arrives with probability alpha[k]. A single
/// class collapses to a plain exponential.
template <typename Scalar, typename DerivedA, typename DerivedM>
ServiceDistribution<Scalar> mixture_from_classes(const Eigen::MatrixBase<DerivedA>& alpha,
                                                 const Eigen::MatrixBase<DerivedM>& mus) {
  using std::abs;
  if (alpha.size() == 0 || alpha.size() != mus.size()) {
    throw Error(Errc::InvalidArgument, "class mixture needs matching, non-empty alpha and mu");
  }
  if ((alpha.array() < Scalar(0)).any() || abs(alpha.sum() - Scalar(1)) > Scalar(1e-12)) {
    throw Error(Errc::WeightsNotNormalized, "class probabilities must sum to one");
  }
  if (alpha.size() == 1) return ServiceDistribution<Scalar>::exponential(mus(0));
  return ServiceDistribution<Scalar>::hyperexponential(Vector<Scalar>(alpha), Vector<Scalar>(mus));
}

}  // namespace mmq

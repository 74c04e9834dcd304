#pragma once

// Model fixtures shared by the unit tests.

#include <vector>

#include "mmq/dps.hpp"
#include "mmq/workload.hpp"

namespace fixtures {

using mmq::MatrixXd;
using mmq::ServiceDistribution;
using mmq::VectorXd;

inline mmq::GeneratorMatrix<double> two_state_q() {
  return mmq::validate_generator((MatrixXd(2, 2) << -1, 1, 2, -2).finished());
}

inline mmq::GeneratorMatrix<double> frozen_q() { return mmq::validate_generator(MatrixXd::Zero(1, 1)); }

// Both services have mean 1/2: (1/2)(1/4) + (1/2)(3/4) and (1/4)(1) + (3/4)(1/3).
inline mmq::ModelSpec<double> two_state_model() {
  std::vector<ServiceDistribution<double>> svc{
      ServiceDistribution<double>::hyperexponential(VectorXd::Constant(2, 0.5), (VectorXd(2) << 4, 4.0 / 3).finished()),
      ServiceDistribution<double>::hyperexponential((VectorXd(2) << 0.25, 0.75).finished(),
                                                    (VectorXd(2) << 1, 3).finished())};
  return mmq::ModelSpec<double>::create(two_state_q(), (VectorXd(2) << 0.9, 1.2).finished(),
                                        (VectorXd(2) << 1, 2).finished(), svc);
}

inline mmq::ModelSpec<double> single(double lambda, ServiceDistribution<double> svc, double c = 1.0) {
  return mmq::ModelSpec<double>::create(frozen_q(), VectorXd::Constant(1, lambda), VectorXd::Constant(1, c), {svc});
}

inline mmq::ModelSpec<double> mm1(double lambda, double mu = 1.0, double c = 1.0) {
  return single(lambda, ServiceDistribution<double>::exponential(mu), c);
}

// K = 2, D = 2 DPS instance with state-dependent load.
inline mmq::DpsSpec<double> dps_two_class(double l1 = 1.2, double l2 = 0.6) {
  return mmq::DpsSpec<double>::create(two_state_q(), (VectorXd(2) << l1, l2).finished(),
                                      (VectorXd(2) << 1, 2).finished(), MatrixXd::Constant(2, 2, 0.5),
                                      (VectorXd(2) << 1, 2).finished(), (VectorXd(2) << 2, 1).finished());
}

// D = 1 DPS with the given class arrival rates.
inline mmq::DpsSpec<double> dps_single(const VectorXd& lambda_k, const VectorXd& mu, const VectorXd& g,
                                       double c = 1.0) {
  const double total = lambda_k.sum();
  return mmq::DpsSpec<double>::create(frozen_q(), VectorXd::Constant(1, total), VectorXd::Constant(1, c),
                                      MatrixXd(lambda_k / total), mu, g);
}

}  // namespace fixtures

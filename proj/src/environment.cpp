#include "mmq/environment.hpp"

#include "mmq/rng.hpp"

namespace mmq {

VectorXd EnvPath::occupancy(Eigen::Index dim) const {
  VectorXd time = VectorXd::Zero(dim);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double end = i + 1 < epochs.size() ? epochs[i + 1] : horizon;
    time(states[i]) += end - epochs[i];
  }
  return time;
}

EnvPath sample_environment_path(const GeneratorMatrix<double>& q, int initial_state, double horizon,
                                std::uint64_t seed) {
  if (!(horizon > 0.0)) throw Error(Errc::InvalidArgument, "horizon must be positive");
  if (initial_state < 0 || initial_state >= q.dim()) {
    throw Error(Errc::InvalidArgument, "initial state out of range");
  }
  Rng rng(seed);
  EnvPath path;
  path.horizon = horizon;
  path.epochs.push_back(0.0);
  path.states.push_back(initial_state);

  double t = 0.0;
  int d = initial_state;
  for (;;) {
    const double exit = q.exit_rate(d);
    if (exit <= 0.0) break;
    t += rng.exponential(exit);
    if (t >= horizon) break;
    double u = rng.uniform() * exit;
    int next = d;
    for (Eigen::Index l = 0; l < q.dim(); ++l) {
      if (l == d || q(d, l) <= 0.0) continue;
      next = static_cast<int>(l);
      u -= q(d, l);
      if (u <= 0.0) break;
    }
    d = next;
    path.epochs.push_back(t);
    path.states.push_back(d);
  }
  return path;
}

}  // namespace mmq

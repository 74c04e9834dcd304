#include "mmq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

#include "mmq/rng.hpp"

namespace mmq {

namespace {

void check_config(const SimConfig& cfg) {
  if (!(cfg.horizon > cfg.warmup) || !(cfg.warmup >= 0.0)) {
    throw Error(Errc::InvalidArgument, "need horizon > warmup >= 0");
  }
  if (cfg.batches < 10) throw Error(Errc::InvalidArgument, "batch means need at least 10 batches");
  if (!(cfg.initial_workload >= 0.0)) throw Error(Errc::InvalidArgument, "initial workload must be >= 0");
}

// Tracks the warmup/batch boundaries and snapshot times along the simulated
// clock. Every boundary is hit exactly, since the simulators advance to the
// value returned by next_cut().
class Schedule {
 public:
  explicit Schedule(const SimConfig& cfg)
      : cfg_(cfg), batch_len_((cfg.horizon - cfg.warmup) / cfg.batches) {
    if (cfg.warmup > 0.0) {
      batch_ = -1;
      segment_end_ = cfg.warmup;
    } else {
      batch_ = 0;
      segment_end_ = batch_end(0);
    }
    spacing_ = cfg.samples > 0 ? (cfg.horizon - cfg.warmup) / static_cast<double>(cfg.samples) : 0.0;
    next_sample_ = cfg.samples > 0 ? sample_time(1) : cfg.horizon + 1.0;
  }

  double next_cut(double t_end) const { return std::min({t_end, segment_end_, next_sample_}); }

  /// Batch receiving the integral up to the next cut; -1 during warmup.
  int batch() const noexcept { return batch_; }
  double batch_length() const noexcept { return batch_len_; }

  /// Called after the clock reached `t`; returns true if a snapshot is due.
  bool reached(double t) {
    if (t == segment_end_ && batch_ + 1 < cfg_.batches) {
      ++batch_;
      segment_end_ = batch_end(batch_);
    }
    if (t == next_sample_) {
      ++taken_;
      next_sample_ = taken_ < cfg_.samples ? sample_time(taken_ + 1) : cfg_.horizon + 1.0;
      return true;
    }
    return false;
  }

 private:
  double batch_end(int b) const {
    return b + 1 == cfg_.batches ? cfg_.horizon : cfg_.warmup + batch_len_ * (b + 1);
  }
  double sample_time(std::size_t i) const {
    return i == cfg_.samples ? cfg_.horizon : cfg_.warmup + spacing_ * static_cast<double>(i);
  }

  const SimConfig& cfg_;
  double batch_len_;
  int batch_;
  double segment_end_;
  double spacing_;
  double next_sample_;
  std::size_t taken_ = 0;
};

int draw_stationary_state(const VectorXd& pi, Rng& rng) {
  double u = rng.uniform();
  for (Eigen::Index d = 0; d + 1 < pi.size(); ++d) {
    u -= pi(d);
    if (u <= 0.0) return static_cast<int>(d);
  }
  return static_cast<int>(pi.size() - 1);
}

int draw_jump(const GeneratorMatrix<double>& q, int from, double u) {
  int target = from;
  for (Eigen::Index l = 0; l < q.dim(); ++l) {
    if (l == from || q(from, l) <= 0.0) continue;
    target = static_cast<int>(l);
    u -= q(from, l);
    if (u <= 0.0) break;
  }
  return target;
}

void normalize(SimEstimates& est, double batch_len) {
  est.workload /= batch_len;
  est.p0 /= batch_len;
  est.occupancy /= batch_len;
  est.m_kd /= batch_len;
  est.share_kd /= batch_len;
}

}  // namespace

SimEstimates simulate_workload(const ModelSpec<double>& m, const SimConfig& cfg) {
  check_config(cfg);
  if (!(traffic_intensity(m) < 1.0)) throw Error(Errc::Unstable, "workload simulation requires rho_inf < 1");

  const int dim = static_cast<int>(m.dim());
  const auto& q = m.generator();
  const VectorXd& lambda = m.lambda();
  const VectorXd& cap = m.capacity();

  SimEstimates est;
  est.states = dim;
  est.batch_weights = VectorXd::Zero(cfg.batches);
  est.workload = VectorXd::Zero(cfg.batches);
  est.p0 = MatrixXd::Zero(cfg.batches, dim);
  est.occupancy = MatrixXd::Zero(cfg.batches, dim);
  est.sample_workload.reserve(cfg.samples);
  est.sample_state.reserve(cfg.samples);

  Rng rng = Rng::stream(cfg.seed, cfg.stream);
  Schedule schedule(cfg);
  double t = 0.0;
  double w = cfg.initial_workload;
  int d = draw_stationary_state(m.pi(), rng);

  // Drains the work linearly from t to t_end with no event in between.
  auto advance = [&](double t_end) {
    while (t < t_end) {
      const double cut = schedule.next_cut(t_end);
      const double len = cut - t;
      const double drain = cap(d) * len;
      double area;
      double idle = 0.0;
      if (w >= drain) {
        area = len * (w - 0.5 * drain);
        w -= drain;
      } else {
        // Hits zero at t + w / c_d and stays empty until the cut.
        if (w > 0.0) ++est.events;
        area = 0.5 * w * w / cap(d);
        idle = len - w / cap(d);
        w = 0.0;
      }
      if (const int b = schedule.batch(); b >= 0) {
        est.workload(b) += area;
        est.p0(b, d) += idle;
        est.occupancy(b, d) += len;
      }
      t = cut;
      if (schedule.reached(t)) {
        est.sample_workload.push_back(w);
        est.sample_state.push_back(d);
      }
    }
  };

  while (t < cfg.horizon) {
    const double arrival = lambda(d);
    const double exit = q.exit_rate(d);
    const double total = arrival + exit;
    if (total <= 0.0) {
      advance(cfg.horizon);
      break;
    }
    const double t_event = t + rng.exponential(total);
    if (t_event >= cfg.horizon) {
      advance(cfg.horizon);
      break;
    }
    advance(t_event);
    ++est.events;
    const double u = rng.uniform() * total;
    if (u <= arrival) {
      w += sample(m.service()[static_cast<std::size_t>(d)], rng);
    } else {
      d = draw_jump(q, d, u - arrival);
    }
  }

  est.batch_weights.setConstant(schedule.batch_length());
  normalize(est, schedule.batch_length());
  est.simulated_time = cfg.horizon;
  return est;
}

SimEstimates simulate_dps(const DpsSpec<double>& spec, const SimConfig& cfg) {
  check_config(cfg);
  const auto& m = spec.model();
  if (!(traffic_intensity(m) < 1.0)) throw Error(Errc::Unstable, "DPS simulation requires rho_inf < 1");

  const int dim = static_cast<int>(spec.states());
  const int classes = static_cast<int>(spec.classes());
  const auto& q = m.generator();
  const MatrixXd lam = spec.class_arrival_rates();
  const VectorXd lam_total = lam.colwise().sum().transpose();
  const VectorXd& cap = m.capacity();
  const VectorXd& mu = spec.mu();
  const VectorXd& g = spec.g();
  const VectorXd inv_mu = mu.cwiseInverse();

  SimEstimates est;
  est.states = dim;
  est.classes = classes;
  est.batch_weights = VectorXd::Zero(cfg.batches);
  est.workload = VectorXd::Zero(cfg.batches);
  est.p0 = MatrixXd::Zero(cfg.batches, dim);
  est.occupancy = MatrixXd::Zero(cfg.batches, dim);
  est.m_kd = MatrixXd::Zero(cfg.batches, classes * dim);
  est.share_kd = MatrixXd::Zero(cfg.batches, classes * dim);
  est.sample_workload.reserve(cfg.samples);
  est.sample_state.reserve(cfg.samples);
  est.sample_m = MatrixXd::Zero(static_cast<Eigen::Index>(cfg.samples), classes);

  Rng rng = Rng::stream(cfg.seed, cfg.stream);
  Schedule schedule(cfg);
  double t = 0.0;
  int d = draw_stationary_state(m.pi(), rng);
  VectorXd count = VectorXd::Zero(classes);  // M_k, exact small integers
  double weighted = 0.0;                     // sum_j g_j M_j
  double work = 0.0;                         // sum_k M_k / mu_k
  Eigen::Index sampled = 0;

  auto advance = [&](double t_end) {
    while (t < t_end) {
      const double cut = schedule.next_cut(t_end);
      const double len = cut - t;
      if (const int b = schedule.batch(); b >= 0) {
        est.occupancy(b, d) += len;
        est.workload(b) += work * len;
        if (weighted > 0.0) {
          for (int k = 0; k < classes; ++k) {
            est.m_kd(b, k * dim + d) += count(k) * len;
            est.share_kd(b, k * dim + d) += g(k) * count(k) / weighted * len;
          }
        } else {
          est.p0(b, d) += len;
        }
      }
      t = cut;
      if (schedule.reached(t)) {
        est.sample_workload.push_back(work);
        est.sample_state.push_back(d);
        est.sample_m.row(sampled++) = count.transpose();
      }
    }
  };

  VectorXd departure(classes);
  while (t < cfg.horizon) {
    double departures = 0.0;
    if (weighted > 0.0) {
      for (int k = 0; k < classes; ++k) {
        departure(k) = mu(k) * cap(d) * g(k) * count(k) / weighted;
        departures += departure(k);
      }
    }
    const double exit = q.exit_rate(d);
    const double total = lam_total(d) + departures + exit;
    if (total <= 0.0) {
      advance(cfg.horizon);
      break;
    }
    const double t_event = t + rng.exponential(total);
    if (t_event >= cfg.horizon) {
      advance(cfg.horizon);
      break;
    }
    advance(t_event);
    ++est.events;

    double u = rng.uniform() * total;
    if (u <= lam_total(d)) {
      int k = -1;
      for (int j = 0; j < classes; ++j) {
        if (lam(j, d) <= 0.0) continue;
        k = j;
        u -= lam(j, d);
        if (u <= 0.0) break;
      }
      count(k) += 1.0;
      weighted += g(k);
      work += inv_mu(k);
      continue;
    }
    u -= lam_total(d);
    if (u <= departures) {
      int k = -1;
      for (int j = 0; j < classes; ++j) {
        if (count(j) <= 0.0) continue;
        k = j;
        u -= departure(j);
        if (u <= 0.0) break;
      }
      count(k) -= 1.0;
      // Recompute from the integer counts to keep the sums free of drift.
      weighted = g.dot(count);
      work = inv_mu.dot(count);
      if (count.sum() == 0.0) weighted = work = 0.0;
      continue;
    }
    d = draw_jump(q, d, u - departures);
  }

  est.batch_weights.setConstant(schedule.batch_length());
  normalize(est, schedule.batch_length());
  est.sample_m.conservativeResize(sampled, classes);
  est.simulated_time = cfg.horizon;
  return est;
}

namespace {

template <typename Run>
SimEstimates replicate(SimConfig cfg, int replications, Run run) {
  if (replications < 1) throw Error(Errc::InvalidArgument, "need at least one replication");
  std::vector<std::future<SimEstimates>> runs;
  runs.reserve(static_cast<std::size_t>(replications));
  for (int r = 0; r < replications; ++r) {
    SimConfig rep = cfg;
    rep.stream = cfg.stream + static_cast<std::uint64_t>(r);
    runs.push_back(std::async(std::launch::async, run, rep));
  }
  SimEstimates merged;
  for (auto& f : runs) merged.merge(f.get());
  return merged;
}

}  // namespace

SimEstimates simulate_workload_replicated(const ModelSpec<double>& m, SimConfig cfg, int replications) {
  return replicate(cfg, replications, [&m](const SimConfig& c) { return simulate_workload(m, c); });
}

SimEstimates simulate_dps_replicated(const DpsSpec<double>& spec, SimConfig cfg, int replications) {
  return replicate(cfg, replications, [&spec](const SimConfig& c) { return simulate_dps(spec, c); });
}

ScaledLaw estimate_scaled_law(const std::vector<double>& samples, double scale, std::optional<double> reference_mean,
                              std::size_t lag) {
  if (lag < 1) lag = 1;
  std::vector<double> kept;
  kept.reserve(samples.size() / lag + 1);
  for (std::size_t i = 0; i < samples.size(); i += lag) kept.push_back(samples[i] * scale);
  if (kept.size() < 1000) {
    throw Error(Errc::TooFewSamples, "scaled-law estimate needs at least 1000 samples, got " +
                                         std::to_string(kept.size()));
  }
  ScaledLaw law;
  law.count = kept.size();
  law.lag = lag;
  const Eigen::Map<const VectorXd> x(kept.data(), static_cast<Eigen::Index>(kept.size()));
  law.mean = x.mean();
  law.variance = (x.array() - law.mean).square().sum() / static_cast<double>(kept.size() - 1);
  law.ks = ks_to_exponential(kept, law.mean);
  law.ks_reference = reference_mean ? ks_to_exponential(kept, *reference_mean) : law.ks;
  return law;
}

double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

std::vector<Estimate> independence_diagnostic(const MatrixXd& values, const std::vector<int>& states, int dim,
                                              int blocks) {
  const Eigen::Index n = values.rows();
  if (static_cast<std::size_t>(n) != states.size()) {
    throw Error(Errc::InvalidArgument, "one environment state per snapshot expected");
  }
  std::vector<Eigen::Index> per_state(static_cast<std::size_t>(dim), 0);
  for (int s : states) ++per_state[static_cast<std::size_t>(s)];
  for (auto c : per_state) {
    if (c < 500) throw Error(Errc::TooFewSamples, "independence diagnostic needs >= 500 snapshots per state");
  }
  if (blocks < 2) blocks = 2;

  // Relative deviation of the state-conditional mean, over rows [begin, end).
  auto deviations = [&](Eigen::Index begin, Eigen::Index end, Eigen::Index col) {
    VectorXd sum = VectorXd::Zero(dim);
    VectorXd cnt = VectorXd::Zero(dim);
    double total = 0.0;
    for (Eigen::Index i = begin; i < end; ++i) {
      const int s = states[static_cast<std::size_t>(i)];
      sum(s) += values(i, col);
      cnt(s) += 1.0;
      total += values(i, col);
    }
    const double marginal = total / static_cast<double>(end - begin);
    VectorXd dev = VectorXd::Constant(dim, std::nan(""));
    if (marginal == 0.0) return dev;
    for (int s = 0; s < dim; ++s) {
      if (cnt(s) > 0.0) dev(s) = (sum(s) / cnt(s) - marginal) / marginal;
    }
    return dev;
  };

  std::vector<Estimate> out;
  for (Eigen::Index col = 0; col < values.cols(); ++col) {
    const VectorXd full = deviations(0, n, col);
    Eigen::Index worst = 0;
    full.cwiseAbs().maxCoeff(&worst);

    std::vector<double> per_block;
    for (int b = 0; b < blocks; ++b) {
      const Eigen::Index begin = n * b / blocks;
      const Eigen::Index end = n * (b + 1) / blocks;
      const double v = deviations(begin, end, col)(worst);
      if (std::isfinite(v)) per_block.push_back(v);
    }
    double hw = 0.0;
    if (per_block.size() >= 2) {
      const Eigen::Map<const VectorXd> x(per_block.data(), static_cast<Eigen::Index>(per_block.size()));
      hw = batch_estimate(x, VectorXd::Ones(x.size())).half_width;
    }
    out.push_back({std::abs(full(worst)), hw});
  }
  return out;
}

}  // namespace mmq

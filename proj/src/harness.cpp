#include "mmq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "mmq/simulator.hpp"

namespace mmq {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void CsvTable::add(const std::string& run_id, const std::string& quantity, int cls, int state, double value,
                   double half_width) {
  std::string row = run_id + ',' + quantity + ',';
  if (cls >= 0) row += std::to_string(cls);
  row += ',';
  if (state >= 0) row += std::to_string(state);
  row += ',' + format_number(value) + ',' + format_number(half_width);
  rows_.push_back(std::move(row));
}

void CsvTable::append(const CsvTable& other) { rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end()); }

std::string CsvTable::str() const {
  std::string out = std::string(kHeader) + '\n';
  for (const auto& r : rows_) out += r + '\n';
  return out;
}

double sweep_horizon(const ExperimentConfig& cfg, double n) {
  return cfg.horizon_n2 ? *cfg.horizon_n2 * n * n : cfg.horizon;
}

namespace {

json to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(VectorXd(m.row(i).transpose())));
  return rows;
}

json to_json(const Estimate& e) { return {{"mean", e.mean}, {"half_width", e.half_width}}; }

Estimate scaled(const Estimate& e, double factor) { return {e.mean * factor, e.half_width * std::abs(factor)}; }

SimConfig sim_config(const ExperimentConfig& cfg, double horizon, std::uint64_t stream) {
  SimConfig sc;
  sc.horizon = horizon;
  sc.warmup = cfg.warmup && !cfg.horizon_n2 ? *cfg.warmup : 0.1 * horizon;
  sc.batches = cfg.batches;
  sc.seed = cfg.seed;
  sc.stream = stream;
  sc.samples = cfg.samples;
  return sc;
}

// sum_d p0_d c_d / c_inf - (1 - rho_inf), batch by batch.
Estimate empty_identity_gap(const ModelSpec<double>& m, const SimEstimates& est, double confidence) {
  const double c_inf = m.mean_capacity();
  const double target = 1.0 - traffic_intensity(m);
  return est.functional([&](Eigen::Index b) { return est.p0.row(b).dot(m.capacity()) / c_inf - target; }, confidence);
}

json estimates_json(const SimEstimates& est, double confidence) {
  json out;
  out["ew"] = to_json(est.ew(confidence));
  json p0 = json::array();
  json occ = json::array();
  for (int d = 0; d < est.states; ++d) {
    p0.push_back(to_json(est.p0_of(d, confidence)));
    occ.push_back(to_json(est.occupancy_of(d, confidence)));
  }
  out["p0"] = p0;
  out["occupancy"] = occ;
  if (est.has_dps()) {
    json m = json::array();
    json share = json::array();
    for (int k = 0; k < est.classes; ++k) {
      json mrow = json::array();
      json srow = json::array();
      for (int d = 0; d < est.states; ++d) {
        mrow.push_back(to_json(est.m_of(k, d, confidence)));
        srow.push_back(to_json(est.share_of(k, d, confidence)));
      }
      m.push_back(mrow);
      share.push_back(srow);
    }
    out["m_kd"] = m;
    out["share_kd"] = share;
  }
  return out;
}

void estimates_csv(CsvTable& csv, const std::string& run, const SimEstimates& est, double confidence) {
  const auto ew = est.ew(confidence);
  csv.add(run, "ew", -1, -1, ew.mean, ew.half_width);
  for (int d = 0; d < est.states; ++d) {
    const auto p = est.p0_of(d, confidence);
    csv.add(run, "p0", -1, d, p.mean, p.half_width);
    const auto o = est.occupancy_of(d, confidence);
    csv.add(run, "occupancy", -1, d, o.mean, o.half_width);
  }
  if (!est.has_dps()) return;
  for (int k = 0; k < est.classes; ++k) {
    for (int d = 0; d < est.states; ++d) {
      const auto m = est.m_of(k, d, confidence);
      csv.add(run, "m_kd", k, d, m.mean, m.half_width);
      const auto s = est.share_of(k, d, confidence);
      csv.add(run, "share_kd", k, d, s.mean, s.half_width);
    }
  }
}

}  // namespace

CommandResult cmd_analyze(const ExperimentConfig& cfg) {
  CommandResult res;
  const auto& m = cfg.workload();
  const std::string& run = cfg.name;
  const double rho = traffic_intensity(m);
  const bool stable = rho < 1.0;

  json& r = res.report;
  r["name"] = cfg.name;
  r["rho_inf"] = rho;
  r["c_inf"] = m.mean_capacity();
  r["stable"] = stable;
  r["pi"] = to_json(m.pi());
  const VectorXd a = offset_vector(m);
  r["a"] = to_json(a);
  res.csv.add(run, "rho_inf", -1, -1, rho);
  res.csv.add(run, "c_inf", -1, -1, m.mean_capacity());
  for (Eigen::Index d = 0; d < a.size(); ++d) res.csv.add(run, "a", -1, static_cast<int>(d), a(d));

  if (cfg.p0) {
    const double ew = mean_workload(m, *cfg.p0, cfg.p0_tolerance);
    r["ew"] = ew;
    res.csv.add(run, "ew", -1, -1, ew);
  } else {
    r["ew"] = nullptr;
    r["ew_note"] = "requires p0";
  }

  const auto hm = HtModelSpec<double>::from(m);
  const auto law = ht_workload_law(hm);
  r["ew_ht"] = law.mean;
  r["law_mean"] = law.mean;
  r["a_ht"] = to_json(ht_offset_vector(hm));
  res.csv.add(run, "ew_ht", -1, -1, law.mean);
  res.csv.add(run, "law_mean", -1, -1, law.mean);

  if (cfg.is_dps()) {
    const auto& spec = cfg.dps();
    const auto crit = critical(spec);
    const auto pred = collapse_prediction(crit);
    const auto loads = class_loads(spec, false);
    const auto hat = class_loads(spec, true);
    const MatrixXd per_state = pred.per_state_means();
    json dps;
    dps["direction"] = to_json(pred.direction);
    dps["ex_mean"] = pred.x_law.mean;
    dps["per_state"] = to_json(per_state);
    dps["lambda_k_inf"] = to_json(loads.lambda_k_inf);
    dps["rho_k_inf"] = to_json(loads.rho_k_inf);
    dps["rho_hat_k"] = to_json(hat.rho_k_inf);
    dps["rho_hat_d"] = to_json(hat.rho_d);
    dps["workload_from_collapse"] = ht_workload_from_collapse(pred, crit).mean;
    r["dps"] = dps;
    res.csv.add(run, "ex_mean", -1, -1, pred.x_law.mean);
    for (Eigen::Index k = 0; k < spec.classes(); ++k) {
      res.csv.add(run, "direction", static_cast<int>(k), -1, pred.direction(k));
      for (Eigen::Index d = 0; d < spec.states(); ++d) {
        res.csv.add(run, "per_state", static_cast<int>(k), static_cast<int>(d), per_state(k, d));
      }
    }
  }
  res.exit_code = stable ? kExitOk : kExitModel;
  return res;
}

CommandResult cmd_simulate(const ExperimentConfig& cfg) {
  CommandResult res;
  const auto sc = sim_config(cfg, cfg.horizon, 0);
  const auto est = cfg.is_dps() ? simulate_dps_replicated(cfg.dps(), sc, cfg.replications)
                                : simulate_workload_replicated(cfg.workload(), sc, cfg.replications);
  const auto& m = cfg.workload();
  json& r = res.report;
  r["name"] = cfg.name;
  r["seed"] = cfg.seed;
  r["horizon"] = sc.horizon;
  r["warmup"] = sc.warmup;
  r["batches"] = est.batches();
  r["replications"] = cfg.replications;
  r["events"] = est.events;
  r["rho_inf"] = traffic_intensity(m);
  r["estimates"] = estimates_json(est, cfg.confidence);
  const auto gap = empty_identity_gap(m, est, cfg.confidence);
  r["empty_identity_gap"] = to_json(gap);

  estimates_csv(res.csv, cfg.name, est, cfg.confidence);
  res.csv.add(cfg.name, "empty_identity_gap", -1, -1, gap.mean, gap.half_width);

  const MeanWorkloadFormula<double> formula(m);
  const auto ew_formula = est.functional([&](Eigen::Index b) { return formula(est.p0.row(b).transpose()); },
                                         cfg.confidence);
  r["ew_formula"] = to_json(ew_formula);
  res.csv.add(cfg.name, "ew_formula", -1, -1, ew_formula.mean, ew_formula.half_width);
  return res;
}

namespace {

struct SweepPoint {
  json row;
  CsvTable csv;
};

// The KS distance uses every snapshot; the decorrelation lag only sets the
// effective sample size behind the critical value.
struct LawSummary {
  ScaledLaw law;
  std::size_t lag = 1;

  std::size_t effective() const { return std::max<std::size_t>(1, law.count / lag); }
};

LawSummary scaled_law(const std::vector<double>& x, double scale, double reference) {
  const std::size_t cap = std::max<std::size_t>(1, x.size() / 1000);
  return {estimate_scaled_law(x, scale, reference), std::min(decorrelation_lag(x, 0.1), cap)};
}

json law_json(const LawSummary& s) {
  return {{"mean", s.law.mean},
          {"variance", s.law.variance},
          {"ks_sample", s.law.ks},
          {"ks", s.law.ks_reference},
          {"count", s.law.count},
          {"lag", s.lag},
          {"effective_count", s.effective()},
          {"ks_critical", ks_critical_1pct(s.effective())}};
}

SweepPoint sweep_workload(const ExperimentConfig& cfg, double n, std::uint64_t stream) {
  SweepPoint pt;
  const std::string run = cfg.name + "/N=" + format_number(n);
  const auto& base = cfg.workload();
  const auto model = ht_parametrize(base, n);
  const double predicted = ht_mean_workload(HtModelSpec<double>::from(base));

  const auto sc = sim_config(cfg, sweep_horizon(cfg, n), stream);
  const auto est = simulate_workload_replicated(model, sc, cfg.replications);

  const Estimate mean = scaled(est.ew(cfg.confidence), 1.0 / n);
  const Estimate ratio = scaled(mean, 1.0 / predicted);
  const auto law = scaled_law(est.sample_workload, 1.0 / n, predicted);
  const MatrixXd w = Eigen::Map<const VectorXd>(est.sample_workload.data(),
                                                static_cast<Eigen::Index>(est.sample_workload.size()));
  const Estimate indep = independence_diagnostic(w, est.sample_state, static_cast<int>(base.dim()))[0];

  pt.row = {{"N", n},
            {"rho", 1.0 - 1.0 / n},
            {"horizon", sc.horizon},
            {"events", est.events},
            {"scaled_mean", to_json(mean)},
            {"predicted_mean", predicted},
            {"ratio", to_json(ratio)},
            {"ks_stat", law.law.ks_reference},
            {"law", law_json(law)},
            {"independence_diag", to_json(indep)}};
  pt.csv.add(run, "scaled_mean", -1, -1, mean.mean, mean.half_width);
  pt.csv.add(run, "predicted_mean", -1, -1, predicted);
  pt.csv.add(run, "ratio", -1, -1, ratio.mean, ratio.half_width);
  pt.csv.add(run, "ks_stat", -1, -1, law.law.ks_reference);
  pt.csv.add(run, "ks_sample", -1, -1, law.law.ks);
  pt.csv.add(run, "ks_critical", -1, -1, ks_critical_1pct(law.effective()));
  pt.csv.add(run, "independence_diag", -1, -1, indep.mean, indep.half_width);
  return pt;
}

SweepPoint sweep_dps(const ExperimentConfig& cfg, double n, std::uint64_t stream) {
  SweepPoint pt;
  const std::string run = cfg.name + "/N=" + format_number(n);
  const auto& base = cfg.dps();
  const auto spec = ht_parametrize(base, n);
  const auto crit = critical(base);
  const auto pred = collapse_prediction(crit);
  const double w_pred = ht_workload_from_collapse(pred, crit).mean;
  const int classes = static_cast<int>(base.classes());
  const int states = static_cast<int>(base.states());

  const auto sc = sim_config(cfg, sweep_horizon(cfg, n), stream);
  const auto est = simulate_dps_replicated(spec, sc, cfg.replications);

  // Per-snapshot collapse coordinates y_k = g_k M_k / (rho_hat_k N) and the
  // common-factor estimate x = sum_k M_k / (N sum_k rho_hat_k / g_k).
  const Eigen::Index rows = est.sample_m.rows();
  MatrixXd y(rows, classes);
  for (int k = 0; k < classes; ++k) y.col(k) = est.sample_m.col(k) / (pred.direction(k) * n);
  const VectorXd x = est.sample_m.rowwise().sum() / (n * pred.direction.sum());
  const std::vector<double> xs(x.data(), x.data() + x.size());

  const Estimate x_mean = est.functional(
      [&](Eigen::Index b) { return est.m_kd.row(b).sum() / (n * pred.direction.sum()); }, cfg.confidence);
  const Estimate ratio = scaled(x_mean, 1.0 / pred.x_law.mean);
  const auto law = scaled_law(xs, 1.0, pred.x_law.mean);
  const auto indep = independence_diagnostic(y, est.sample_state, states);

  const Estimate w_mean = scaled(est.ew(cfg.confidence), 1.0 / n);
  const auto w_law = scaled_law(est.sample_workload, 1.0 / n, w_pred);

  double min_corr = 1.0;
  for (int k = 1; k < classes; ++k) min_corr = std::min(min_corr, correlation(y.col(0), y.col(k)));
  // Mean relative spread (max_k y_k - min_k y_k) / mean_k y_k over non-empty snapshots.
  double spread = 0.0;
  Eigen::Index busy = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double avg = y.row(i).mean();
    if (avg <= 0.0) continue;
    spread += (y.row(i).maxCoeff() - y.row(i).minCoeff()) / avg;
    ++busy;
  }
  spread = busy > 0 ? spread / static_cast<double>(busy) : 0.0;

  double indep_max = 0.0;
  json cls = json::array();
  for (int k = 0; k < classes; ++k) {
    const Estimate mk = est.functional(
        [&](Eigen::Index b) { return est.m_kd.row(b).segment(static_cast<Eigen::Index>(k) * states, states).sum() / n; },
        cfg.confidence);
    const double pk = pred.direction(k) * pred.x_law.mean;
    const Estimate rk = scaled(mk, 1.0 / pk);
    std::vector<double> yk(y.col(k).data(), y.col(k).data() + rows);
    const auto lk = scaled_law(yk, 1.0, pred.x_law.mean);
    indep_max = std::max(indep_max, indep[static_cast<std::size_t>(k)].mean);
    cls.push_back({{"class", k},
                   {"scaled_mean", to_json(mk)},
                   {"predicted_mean", pk},
                   {"ratio", to_json(rk)},
                   {"ks_stat", lk.law.ks_reference},
                   {"independence_diag", to_json(indep[static_cast<std::size_t>(k)])}});
    pt.csv.add(run, "class_scaled_mean", k, -1, mk.mean, mk.half_width);
    pt.csv.add(run, "class_predicted_mean", k, -1, pk);
    pt.csv.add(run, "class_ratio", k, -1, rk.mean, rk.half_width);
    pt.csv.add(run, "class_ks_stat", k, -1, lk.law.ks_reference);
    pt.csv.add(run, "class_independence_diag", k, -1, indep[static_cast<std::size_t>(k)].mean,
               indep[static_cast<std::size_t>(k)].half_width);
  }

  pt.row = {{"N", n},
            {"rho", 1.0 - 1.0 / n},
            {"horizon", sc.horizon},
            {"events", est.events},
            {"scaled_mean", to_json(x_mean)},
            {"predicted_mean", pred.x_law.mean},
            {"ratio", to_json(ratio)},
            {"ks_stat", law.law.ks_reference},
            {"law", law_json(law)},
            {"independence_diag", indep_max},
            {"collapse_ratio_stats", {{"min_correlation", min_corr}, {"mean_relative_spread", spread}}},
            {"workload", {{"scaled_mean", to_json(w_mean)},
                          {"predicted_mean", w_pred},
                          {"ks_stat", w_law.law.ks_reference}}},
            {"classes", cls}};
  pt.csv.add(run, "scaled_mean", -1, -1, x_mean.mean, x_mean.half_width);
  pt.csv.add(run, "predicted_mean", -1, -1, pred.x_law.mean);
  pt.csv.add(run, "ratio", -1, -1, ratio.mean, ratio.half_width);
  pt.csv.add(run, "ks_stat", -1, -1, law.law.ks_reference);
  pt.csv.add(run, "ks_critical", -1, -1, ks_critical_1pct(law.effective()));
  pt.csv.add(run, "independence_diag", -1, -1, indep_max);
  pt.csv.add(run, "collapse_min_correlation", -1, -1, min_corr);
  pt.csv.add(run, "collapse_mean_relative_spread", -1, -1, spread);
  pt.csv.add(run, "workload_scaled_mean", -1, -1, w_mean.mean, w_mean.half_width);
  pt.csv.add(run, "workload_predicted_mean", -1, -1, w_pred);
  pt.csv.add(run, "workload_ks_stat", -1, -1, w_law.law.ks_reference);
  return pt;
}

}  // namespace

CommandResult cmd_ht_sweep(const ExperimentConfig& cfg) {
  CommandResult res;
  std::vector<std::future<SweepPoint>> points;
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    const double n = cfg.n_values[i];
    // Each N gets its own block of replication streams.
    const std::uint64_t stream = static_cast<std::uint64_t>(i + 1) << 20;
    points.push_back(std::async(std::launch::async, [&cfg, n, stream] {
      return cfg.is_dps() ? sweep_dps(cfg, n, stream) : sweep_workload(cfg, n, stream);
    }));
  }
  json rows = json::array();
  bool partial = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      auto pt = points[i].get();
      rows.push_back(std::move(pt.row));
      res.csv.append(pt.csv);
    } catch (const Error& e) {
      partial = true;
      rows.push_back({{"N", cfg.n_values[i]}, {"error", e.what()}, {"error_code", std::string(to_string(e.code()))}});
      res.csv.add(cfg.name + "/N=" + format_number(cfg.n_values[i]), "failed", -1, -1, 1.0);
    }
  }
  res.report = {{"name", cfg.name},
                {"seed", cfg.seed},
                {"model", cfg.is_dps() ? "dps" : "workload"},
                {"replications", cfg.replications},
                {"partial", partial},
                {"rows", rows}};
  res.exit_code = partial ? kExitModel : kExitOk;
  return res;
}

namespace {

struct Check {
  std::string name;
  int cls = -1;
  Estimate value;

  bool pass() const { return std::abs(value.mean) <= 3.0 * value.half_width; }
};

Estimate difference(const Estimate& a, const Estimate& b) {
  return {a.mean - b.mean, std::hypot(a.half_width, b.half_width)};
}

}  // namespace

CommandResult cmd_validate(const ExperimentConfig& cfg) {
  CommandResult res;
  const auto& m = cfg.workload();
  const auto sc = sim_config(cfg, cfg.horizon, 0);
  std::vector<Check> checks;

  if (cfg.is_dps()) {
    const auto& spec = cfg.dps();
    const auto est = simulate_dps_replicated(spec, sc, cfg.replications);
    const auto checked = cfg.check_mu ? spec.with_class_rates(*cfg.check_mu) : spec;
    const auto rate = rate_conservation_residual(checked, est, cfg.confidence);
    const auto moment = weighted_moment_residual(checked, est, cfg.confidence);
    for (int k = 0; k < est.classes; ++k) {
      checks.push_back({"rate_conservation", k, rate[static_cast<std::size_t>(k)]});
      checks.push_back({"weighted_moment", k, moment[static_cast<std::size_t>(k)]});
    }
    checks.push_back({"empty_probability_identity", -1, empty_identity_gap(m, est, cfg.confidence)});
    // Same model simulated as a plain workload process on independent streams.
    auto wsc = sc;
    wsc.stream = sc.stream + (1u << 20);
    const auto west = simulate_workload_replicated(m, wsc, cfg.replications);
    checks.push_back({"work_conservation", -1, difference(est.ew(cfg.confidence), west.ew(cfg.confidence))});
  } else {
    const auto est = simulate_workload_replicated(m, sc, cfg.replications);
    checks.push_back({"empty_probability_identity", -1, empty_identity_gap(m, est, cfg.confidence)});
    const MeanWorkloadFormula<double> formula(m);
    const auto ew_formula = est.functional([&](Eigen::Index b) { return formula(est.p0.row(b).transpose()); },
                                           cfg.confidence);
    checks.push_back({"mean_workload_formula", -1, difference(est.ew(cfg.confidence), ew_formula)});
  }

  bool all = true;
  json list = json::array();
  for (const auto& c : checks) {
    all = all && c.pass();
    json item = {{"check", c.name}, {"residual", to_json(c.value)}, {"pass", c.pass()}};
    if (c.cls >= 0) item["class"] = c.cls;
    list.push_back(item);
    res.csv.add(cfg.name, c.name, c.cls, -1, c.value.mean, c.value.half_width);
  }
  res.report = {{"name", cfg.name}, {"seed", cfg.seed}, {"horizon", sc.horizon}, {"pass", all}, {"checks", list}};
  res.exit_code = all ? kExitOk : kExitValidation;
  return res;
}

CommandResult run_mode(Mode mode, const ExperimentConfig& cfg) {
  switch (mode) {
    case Mode::Analyze: return cmd_analyze(cfg);
    case Mode::Simulate: return cmd_simulate(cfg);
    case Mode::HtSweep: return cmd_ht_sweep(cfg);
    case Mode::Validate: return cmd_validate(cfg);
  }
  throw Error(Errc::Config, "unknown mode");
}

std::vector<std::string> write_outputs(const ExperimentConfig& cfg, Mode mode, const CommandResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  std::string stem = to_string(mode);
  std::replace(stem.begin(), stem.end(), '-', '_');
  const fs::path base = fs::path(cfg.output_dir) / (cfg.name + "." + stem);
  std::vector<std::string> written;

  const std::string json_path = base.string() + ".json";
  std::ofstream(json_path) << result.report.dump(2) << '\n';
  written.push_back(json_path);
  if (result.csv.rows() > 0) {
    const std::string csv_path = base.string() + ".csv";
    std::ofstream(csv_path) << result.csv.str();
    written.push_back(csv_path);
  }
  return written;
}

}  // namespace mmq

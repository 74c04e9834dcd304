#include "mmq/config.hpp"

#include <fstream>
#include <sstream>

namespace mmq {

using nlohmann::json;

std::optional<Mode> parse_mode(const std::string& name) {
  if (name == "analyze") return Mode::Analyze;
  if (name == "simulate") return Mode::Simulate;
  if (name == "ht-sweep") return Mode::HtSweep;
  if (name == "validate") return Mode::Validate;
  return std::nullopt;
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Analyze: return "analyze";
    case Mode::Simulate: return "simulate";
    case Mode::HtSweep: return "ht-sweep";
    case Mode::Validate: return "validate";
  }
  return "unknown";
}

const ModelSpec<double>& workload_model(const AnyModel& model) {
  if (const auto* dps = std::get_if<DpsSpec<double>>(&model)) return dps->model();
  return std::get<ModelSpec<double>>(model);
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::Config, what); }

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) config_error(std::string("missing required key '") + key + "'");
  return doc.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) config_error(what + " must be a number");
  return v.get<double>();
}

VectorXd vector_of(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) config_error(what + " must be a non-empty array of numbers");
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], what);
  return out;
}

MatrixXd matrix_of(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) config_error(what + " must be an array of arrays");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].size();
  MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) config_error(what + " rows must all have the same length");
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number(v[i][j], what);
    }
  }
  return out;
}

AnyModel parse_model(const json& doc) {
  auto q = validate_generator(matrix_of(require(doc, "generator"), "model.generator"));
  VectorXd lambda = vector_of(require(doc, "lambda"), "model.lambda");
  VectorXd capacity = vector_of(require(doc, "capacity"), "model.capacity");

  if (doc.contains("classes")) {
    const json& cls = doc.at("classes");
    return DpsSpec<double>::create(std::move(q), std::move(lambda), std::move(capacity),
                                   matrix_of(require(cls, "alpha"), "model.classes.alpha"),
                                   vector_of(require(cls, "mu"), "model.classes.mu"),
                                   vector_of(require(cls, "g"), "model.classes.g"));
  }
  const json& svc = require(doc, "service");
  if (!svc.is_array()) config_error("model.service must be an array with one entry per state");
  std::vector<ServiceDistribution<double>> service;
  for (const auto& s : svc) service.push_back(parse_service(s));
  return ModelSpec<double>::create(std::move(q), std::move(lambda), std::move(capacity), std::move(service));
}

}  // namespace

ServiceDistribution<double> parse_service(const json& doc) {
  const json& kind = require(doc, "kind");
  if (!kind.is_string()) config_error("service kind must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "exp") return ServiceDistribution<double>::exponential(number(require(doc, "mu"), "service.mu"));
  if (k == "det") return ServiceDistribution<double>::deterministic(number(require(doc, "value"), "service.value"));
  if (k == "hyperexp") {
    return ServiceDistribution<double>::hyperexponential(vector_of(require(doc, "alpha"), "service.alpha"),
                                                         vector_of(require(doc, "mu"), "service.mu"));
  }
  config_error("unknown service kind '" + k + "' (expected exp, hyperexp or det)");
}

json service_to_json(const ServiceDistribution<double>& dist) {
  struct {
    json operator()(const Exponential<double>& e) const { return {{"kind", "exp"}, {"mu", e.rate}}; }
    json operator()(const HyperExponential<double>& h) const {
      return {{"kind", "hyperexp"},
              {"alpha", std::vector<double>(h.weights.data(), h.weights.data() + h.weights.size())},
              {"mu", std::vector<double>(h.rates.data(), h.rates.data() + h.rates.size())}};
    }
    json operator()(const Deterministic<double>& d) const { return {{"kind", "det"}, {"value", d.value}}; }
  } visitor;
  return dist.visit(visitor);
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) config_error("configuration must be a JSON object");
  ExperimentConfig cfg{.model = parse_model(require(doc, "model"))};

  if (doc.contains("name")) {
    if (!doc["name"].is_string()) config_error("name must be a string");
    cfg.name = doc["name"].get<std::string>();
  }
  if (doc.contains("mode")) {
    const auto m = doc["mode"].is_string() ? parse_mode(doc["mode"].get<std::string>()) : std::nullopt;
    if (!m) config_error("mode must be one of analyze, simulate, ht-sweep, validate");
    cfg.mode = m;
  }
  if (doc.contains("p0")) {
    cfg.p0 = vector_of(doc["p0"], "p0");
    if (cfg.p0->size() != cfg.workload().dim()) config_error("p0 needs one entry per environment state");
  }
  if (doc.contains("p0_tolerance")) cfg.p0_tolerance = number(doc["p0_tolerance"], "p0_tolerance");
  if (doc.contains("n_values")) {
    const VectorXd n = vector_of(doc["n_values"], "n_values");
    cfg.n_values.assign(n.data(), n.data() + n.size());
  }
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    if (cfg.n_values[i] < 2 || (i > 0 && !(cfg.n_values[i] > cfg.n_values[i - 1]))) {
      config_error("n_values must be strictly increasing and all >= 2");
    }
  }
  if (doc.contains("horizon")) cfg.horizon = number(doc["horizon"], "horizon");
  if (doc.contains("warmup")) cfg.warmup = number(doc["warmup"], "warmup");
  if (doc.contains("horizon_n2")) cfg.horizon_n2 = number(doc["horizon_n2"], "horizon_n2");
  if (!(cfg.horizon > cfg.warmup_for(cfg.horizon)) || cfg.warmup_for(cfg.horizon) < 0.0) {
    config_error("horizon must exceed warmup");
  }
  if (cfg.horizon_n2 && !(*cfg.horizon_n2 > 0.0)) config_error("horizon_n2 must be positive");
  if (doc.contains("batches")) {
    cfg.batches = static_cast<int>(number(doc["batches"], "batches"));
    if (cfg.batches < 10) config_error("batches must be >= 10");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) config_error("seed must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("replications")) {
    cfg.replications = static_cast<int>(number(doc["replications"], "replications"));
    if (cfg.replications < 1) config_error("replications must be >= 1");
  }
  if (doc.contains("samples")) {
    const double s = number(doc["samples"], "samples");
    if (s < 0) config_error("samples must be >= 0");
    cfg.samples = static_cast<std::size_t>(s);
  }
  if (doc.contains("confidence")) {
    cfg.confidence = number(doc["confidence"], "confidence");
    if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) config_error("confidence must lie in (0, 1)");
  }
  if (doc.contains("check_mu")) {
    if (!cfg.is_dps()) config_error("check_mu only applies to DPS models");
    cfg.check_mu = vector_of(doc["check_mu"], "check_mu");
    if (cfg.check_mu->size() != cfg.dps().classes()) config_error("check_mu needs one rate per class");
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) config_error("output_dir must be a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    config_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace mmq

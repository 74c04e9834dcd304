#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mmq/harness.hpp"

using mmq::Errc;
using mmq::Error;
using nlohmann::json;

namespace {

json mm1_doc() {
  return json::parse(R"({
    "name": "mm1",
    "model": {"generator": [[0]], "lambda": [0.8], "capacity": [1], "service": [{"kind": "exp", "mu": 1}]}
  })");
}

json dps_doc() {
  return json::parse(R"({
    "name": "dps",
    "model": {
      "generator": [[-1, 1], [2, -2]],
      "lambda": [0.6, 0.3],
      "capacity": [1, 2],
      "classes": {"alpha": [[0.5, 0.5], [0.5, 0.5]], "mu": [1, 2], "g": [2, 1]}
    },
    "horizon": 6e4,
    "seed": 21
  })");
}

Errc config_code(const json& doc) {
  try {
    mmq::parse_config(doc);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "config accepted: " << doc.dump();
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Config, Defaults) {
  const auto cfg = mmq::parse_config(mm1_doc());
  EXPECT_EQ(cfg.name, "mm1");
  EXPECT_FALSE(cfg.is_dps());
  EXPECT_EQ(cfg.n_values, (std::vector<double>{10, 50, 100, 200}));
  EXPECT_EQ(cfg.batches, 30);
  EXPECT_DOUBLE_EQ(cfg.warmup_for(cfg.horizon), 0.1 * cfg.horizon);
  EXPECT_FALSE(cfg.p0.has_value());
}

TEST(Config, SchemaErrors) {
  auto with = [](json doc, const char* key, json value) {
    doc[key] = std::move(value);
    return doc;
  };
  EXPECT_EQ(config_code(json::object()), Errc::Config);
  EXPECT_EQ(config_code(json::array()), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "n_values", {10, 10})), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "n_values", {1, 10})), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "batches", 5)), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "seed", -1)), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "mode", "explode")), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "p0", {0.1, 0.1})), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "check_mu", {1.0})), Errc::Config);
  EXPECT_EQ(config_code(with(with(mm1_doc(), "horizon", 10), "warmup", 20)), Errc::Config);
  EXPECT_EQ(config_code(with(mm1_doc(), "confidence", 1.5)), Errc::Config);

  auto bad_kind = mm1_doc();
  bad_kind["model"]["service"][0]["kind"] = "gamma";
  EXPECT_EQ(config_code(bad_kind), Errc::Config);
  auto missing = mm1_doc();
  missing["model"].erase("capacity");
  EXPECT_EQ(config_code(missing), Errc::Config);
  auto ragged = mm1_doc();
  ragged["model"]["generator"] = json::parse("[[-1, 1], [2]]");
  EXPECT_EQ(config_code(ragged), Errc::Config);
}

TEST(Config, ModelErrorsKeepTheirCodes) {
  auto reducible = mm1_doc();
  reducible["model"]["generator"] = json::parse("[[-1, 1], [0, 0]]");
  reducible["model"]["lambda"] = {0.5, 0.5};
  reducible["model"]["capacity"] = {1, 1};
  reducible["model"]["service"] = json::parse(R"([{"kind": "exp", "mu": 1}, {"kind": "exp", "mu": 1}])");
  EXPECT_EQ(config_code(reducible), Errc::Reducible);
  auto weights = mm1_doc();
  weights["model"]["service"][0] = json::parse(R"({"kind": "hyperexp", "alpha": [0.5, 0.6], "mu": [1, 2]})");
  EXPECT_EQ(config_code(weights), Errc::WeightsNotNormalized);
}

TEST(Config, ServiceJsonRoundTrip) {
  for (const char* text : {R"({"kind":"exp","mu":2.0})", R"({"kind":"det","value":3.0})",
                           R"({"kind":"hyperexp","alpha":[0.25,0.75],"mu":[1.0,3.0]})"}) {
    const auto doc = json::parse(text);
    EXPECT_EQ(mmq::service_to_json(mmq::parse_service(doc)), doc);
  }
}

TEST(Analyze, MM1Report) {
  auto doc = mm1_doc();
  const auto res = mmq::cmd_analyze(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitOk);
  EXPECT_DOUBLE_EQ(res.report["rho_inf"].get<double>(), 0.8);
  EXPECT_NEAR(res.report["ew_ht"].get<double>(), 1.0, 1e-14);
  EXPECT_NEAR(res.report["law_mean"].get<double>(), 1.0, 1e-14);
  EXPECT_TRUE(res.report["ew"].is_null());
  EXPECT_EQ(res.report["ew_note"], "requires p0");

  doc["p0"] = {0.2};
  const auto with_p0 = mmq::cmd_analyze(mmq::parse_config(doc));
  EXPECT_NEAR(with_p0.report["ew"].get<double>(), 4.0, 1e-12);
  EXPECT_FALSE(with_p0.report.contains("ew_note"));
}

TEST(Analyze, UnstableModelReportsAndFails) {
  auto doc = mm1_doc();
  doc["model"]["lambda"] = {1.25};
  const auto res = mmq::cmd_analyze(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitModel);
  EXPECT_FALSE(res.report["stable"].get<bool>());
  EXPECT_NEAR(res.report["ew_ht"].get<double>(), 1.0, 1e-14);
}

TEST(Analyze, DpsWeightedExample) {
  const auto doc = json::parse(R"({
    "name": "dps1",
    "model": {
      "generator": [[0]], "lambda": [1.5], "capacity": [1],
      "classes": {"alpha": [[0.3333333333333333], [0.6666666666666667]], "mu": [1, 2], "g": [2, 1]}
    }
  })");
  const auto res = mmq::cmd_analyze(mmq::parse_config(doc));
  EXPECT_NEAR(res.report["dps"]["ex_mean"].get<double>(), 1.5, 1e-12);
  EXPECT_NEAR(res.report["dps"]["workload_from_collapse"].get<double>(), 0.75, 1e-12);
  EXPECT_NEAR(res.report["ew_ht"].get<double>(), 0.75, 1e-12);
}

TEST(Csv, Format) {
  mmq::CsvTable t;
  t.add("r", "rho", -1, -1, 0.375);
  t.add("r", "m_kd", 1, 0, 1.0 / 3.0, 0.01);
  EXPECT_EQ(t.str(), "run_id,quantity,class,state,value,half_width\n"
                     "r,rho,,,0.375,0\n"
                     "r,m_kd,1,0,0.333333333333,0.01\n");
  EXPECT_EQ(mmq::format_number(1e-20), "1e-20");
  EXPECT_EQ(mmq::format_number(-2.5), "-2.5");
}

TEST(Sweep, ReplicatedRunsAreByteIdentical) {
  auto doc = dps_doc();
  doc["n_values"] = {10, 20};
  doc["horizon_n2"] = 60;
  doc["replications"] = 2;
  doc["samples"] = 3000;
  const auto cfg = mmq::parse_config(doc);
  const auto a = mmq::cmd_ht_sweep(cfg);
  const auto b = mmq::cmd_ht_sweep(cfg);
  EXPECT_EQ(a.exit_code, mmq::kExitOk);
  EXPECT_EQ(a.csv.str(), b.csv.str());
  EXPECT_EQ(a.report.dump(), b.report.dump());
  ASSERT_EQ(a.report["rows"].size(), 2u);
  for (const auto& row : a.report["rows"]) {
    for (const char* key : {"N", "scaled_mean", "predicted_mean", "ratio", "ks_stat", "independence_diag",
                            "collapse_ratio_stats"}) {
      EXPECT_TRUE(row.contains(key)) << key;
    }
  }
  // Predicted values do not depend on N.
  EXPECT_EQ(a.report["rows"][0]["predicted_mean"], a.report["rows"][1]["predicted_mean"]);
}

TEST(Sweep, OverloadedBaseModelIsFine) {
  auto doc = mm1_doc();
  doc["model"]["lambda"] = {3.0};
  doc["n_values"] = {5, 10};
  doc["horizon_n2"] = 100;
  doc["samples"] = 2000;
  const auto res = mmq::cmd_ht_sweep(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitOk);
  EXPECT_NEAR(res.report["rows"][1]["rho"].get<double>(), 0.9, 1e-15);
  EXPECT_NEAR(res.report["rows"][1]["predicted_mean"].get<double>(), 1.0, 1e-14);
}

TEST(Sweep, TooFewSnapshotsIsPartial) {
  auto doc = mm1_doc();
  doc["n_values"] = {5, 10};
  doc["horizon_n2"] = 50;
  doc["samples"] = 100;
  const auto res = mmq::cmd_ht_sweep(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitModel);
  EXPECT_TRUE(res.report["partial"].get<bool>());
  EXPECT_EQ(res.report["rows"][0]["error_code"], "TooFewSamples");
}

TEST(Validate, SmallDpsPasses) {
  const auto res = mmq::cmd_validate(mmq::parse_config(dps_doc()));
  EXPECT_EQ(res.exit_code, mmq::kExitOk) << res.report.dump(2);
  EXPECT_EQ(res.report["checks"].size(), 6u);
}

TEST(Validate, CorruptedRatesFail) {
  auto doc = dps_doc();
  doc["check_mu"] = {1.5, 2};
  const auto res = mmq::cmd_validate(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitValidation);
  EXPECT_FALSE(res.report["checks"][0]["pass"].get<bool>());
  EXPECT_EQ(res.report["checks"][0]["check"], "rate_conservation");
}

TEST(Validate, SingleClassProcessorSharing) {
  const auto doc = json::parse(R"({
    "name": "ps",
    "model": {"generator": [[0]], "lambda": [0.6], "capacity": [1],
              "classes": {"alpha": [[1]], "mu": [1], "g": [1]}},
    "horizon": 1e5,
    "seed": 4
  })");
  const auto res = mmq::cmd_validate(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitOk) << res.report.dump(2);
}

TEST(Validate, WorkloadModel) {
  auto doc = mm1_doc();
  doc["horizon"] = 1e5;
  const auto res = mmq::cmd_validate(mmq::parse_config(doc));
  EXPECT_EQ(res.exit_code, mmq::kExitOk) << res.report.dump(2);
  EXPECT_EQ(res.report["checks"][1]["check"], "mean_workload_formula");
}

TEST(Outputs, WrittenPerMode) {
  namespace fs = std::filesystem;
  auto doc = mm1_doc();
  const fs::path dir = fs::temp_directory_path() / "mmq_outputs_test";
  fs::remove_all(dir);
  doc["output_dir"] = dir.string();
  const auto cfg = mmq::parse_config(doc);
  const auto files = mmq::write_outputs(cfg, mmq::Mode::HtSweep, mmq::cmd_analyze(cfg));
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(fs::path(files[0]).filename(), "mm1.ht_sweep.json");
  std::ifstream csv(files[1]);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, mmq::CsvTable::kHeader);
  fs::remove_all(dir);
}

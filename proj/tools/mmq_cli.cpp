// mmq: analytic, simulation, heavy-traffic sweep and validation runs for
// Markov-modulated M/G/1 and DPS models.
//
//   mmq analyze|simulate|ht-sweep|validate --config <path> [--seed u64] [--out dir]
//
// MMQ_SEED and MMQ_OUT_DIR override the config file; command-line flags
// override both.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "mmq/harness.hpp"

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    throw mmq::Error(mmq::Errc::Config, "seed '" + text + "' is not an unsigned 64-bit integer");
  }
  if (used != text.size()) throw mmq::Error(mmq::Errc::Config, "seed '" + text + "' is not an unsigned 64-bit integer");
  return v;
}

int exit_for(mmq::Errc code) {
  switch (code) {
    case mmq::Errc::Config: return mmq::kExitConfig;
    case mmq::Errc::TooFewSamples:
    case mmq::Errc::MissingEstimate: return mmq::kExitValidation;
    default: return mmq::kExitModel;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-modulated M/G/1 and DPS heavy-traffic toolkit", "mmq"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string seed_text;
  std::string out_dir;
  for (const char* name : {"analyze", "simulate", "ht-sweep", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--seed", seed_text, "random seed (unsigned 64-bit)");
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? mmq::kExitOk : mmq::kExitConfig;
  }

  const auto mode = mmq::parse_mode(app.get_subcommands().front()->get_name());
  try {
    auto cfg = mmq::load_config(config_path);
    if (auto s = env("MMQ_SEED")) cfg.seed = parse_seed(*s);
    if (auto o = env("MMQ_OUT_DIR")) cfg.output_dir = *o;
    if (!seed_text.empty()) cfg.seed = parse_seed(seed_text);
    if (!out_dir.empty()) cfg.output_dir = out_dir;

    const auto result = mmq::run_mode(*mode, cfg);
    for (const auto& path : mmq::write_outputs(cfg, *mode, result)) std::cout << path << '\n';
    if (result.exit_code != mmq::kExitOk) {
      std::cerr << "mmq: " << mmq::to_string(*mode) << " finished with exit code " << result.exit_code << '\n';
    }
    return result.exit_code;
  } catch (const mmq::Error& e) {
    std::cerr << "mmq: " << mmq::to_string(e.code()) << ": " << e.what() << '\n';
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "mmq: " << e.what() << '\n';
    return mmq::kExitModel;
  }
}

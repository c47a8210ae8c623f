#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gde/cli/commands.hpp"
#include "gde/errors.hpp"

namespace {

enum Exit { ok = 0, other = 1, config = 2, numerical = 3, io = 4 };

void setup_logging() {
  auto logger = spdlog::stderr_color_st("gde");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("GDE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour it when asked for.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ignoring unknown GDE_LOG level '{}'", env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Graph neural ODE toolkit"};
  app.set_version_flag("--version", std::string(gde::cli::version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint;
  std::string out;
  std::string seeds;
  std::string horizons;
  std::uint64_t gradcheck_seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "INI run configuration")->required();
    cmd->add_option("--out", out, "Output directory (overrides [run] out)");
    cmd->add_option("--seeds", seeds, "Seed list: 0..9, 3 or 0,2,5");
    cmd->add_option("--horizons", horizons, "Extrapolation horizons, e.g. 1,3,5,10");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate the multi-particle system and write the rollout");
  add_common(simulate);
  auto* train = app.add_subcommand("train", "Train one model per seed");
  add_common(train);
  auto* eval = app.add_subcommand("eval", "Evaluate trained checkpoints");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "Evaluate this checkpoint instead of <out>/seed_<s>");
  auto* report = app.add_subcommand("report", "Aggregate evaluations across seeds");
  add_common(report);
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--out", out, "Directory for gradcheck.json");
  gradcheck->add_option("--seed", gradcheck_seed, "Seed for the random test inputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::config;
  }

  try {
    if (gradcheck->parsed()) {
      const bool passed =
          gde::cli::cmd_gradcheck(out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out),
                                  gradcheck_seed);
      if (!passed) spdlog::error("gradient check failed");
      return passed ? Exit::ok : Exit::numerical;
    }

    gde::cli::Overrides overrides;
    if (!out.empty()) overrides.out = out;
    if (!seeds.empty()) overrides.seeds = seeds;
    if (!horizons.empty()) overrides.horizons = horizons;
    const auto cfg = gde::cli::load_config(config_path, overrides);

    if (simulate->parsed()) {
      if (cfg.task != gde::cli::Task::particles) throw gde::ConfigError("simulate needs task = particles");
      gde::cli::cmd_simulate(cfg);
    } else if (train->parsed()) {
      gde::cli::cmd_train(cfg);
    } else if (eval->parsed()) {
      gde::cli::cmd_eval(cfg, checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoint));
    } else if (report->parsed()) {
      std::cout << gde::cli::cmd_report(cfg);
    }
    return Exit::ok;
  } catch (const gde::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return Exit::config;
  } catch (const gde::NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return Exit::numerical;
  } catch (const gde::IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return Exit::io;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return Exit::other;
  }
}

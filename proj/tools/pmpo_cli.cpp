// pmpo: run, validate and compare experiment configs.
//
// Exit codes: 0 success, 2 config validation failure, 3 runtime failure.

#include "pmpo/errors.hpp"
#include "pmpo/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

// Parses every file and prints all violations. Returns nullopt when any file
// is invalid.
std::optional<std::vector<pmpo::ExperimentConfig>> load(const std::vector<std::string>& paths) {
  std::vector<pmpo::ExperimentConfig> configs;
  bool ok = true;
  for (const auto& path : paths) {
    auto parsed = pmpo::parse_experiment_file(path);
    if (!parsed.config) {
      ok = false;
      for (const auto& v : parsed.violations) std::cerr << path << ": " << v << '\n';
      continue;
    }
    configs.push_back(std::move(*parsed.config));
  }
  if (!ok) return std::nullopt;
  return configs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based policy optimization experiments"};
  app.require_subcommand(1);

  std::vector<std::string> files;
  std::optional<std::string> output_dir;
  std::string seeds_text;
  bool quiet = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--output-dir", output_dir, "Directory for CSV, JSON and SVG outputs");
    cmd->add_option("--seeds", seeds_text, "Seed override, e.g. 0-9 or 0,3,7");
    cmd->add_flag("--quiet", quiet, "Suppress progress output");
  };

  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", files, "Config JSON")->required()->expected(1);
  add_common(run);

  auto* validate = app.add_subcommand("validate", "Check configs without running them");
  validate->add_option("configs", files, "Config JSON files")->required()->expected(1, -1);

  auto* compare = app.add_subcommand("compare", "Run several configs and plot them together");
  compare->add_option("configs", files, "Config JSON files")->required()->expected(1, -1);
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  const auto configs = load(files);
  if (!configs) return kInvalid;
  if (validate->parsed()) {
    for (const auto& path : files) std::cout << path << ": ok\n";
    return kOk;
  }

  pmpo::RunOptions options;
  options.output_dir = output_dir;
  options.quiet = quiet;
  try {
    if (!seeds_text.empty()) options.seeds = pmpo::parse_seed_list(seeds_text);
  } catch (const pmpo::InputError& e) {
    std::cerr << "--seeds: " << e.what() << '\n';
    return kInvalid;
  }

  try {
    if (run->parsed()) {
      const auto outcome = pmpo::run_experiment(configs->front(), options, std::cout);
      if (!quiet) std::cout << "wrote " << outcome.output_dir.string() << '\n';
    } else {
      const auto result = pmpo::compare_experiments(*configs, options, std::cout);
      if (!quiet) std::cout << result.dump(2) << '\n';
    }
  } catch (const pmpo::ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "config: " << v << '\n';
    return kInvalid;
  } catch (const pmpo::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

#pragma once

// Declarative experiment configs (one JSON document) and the runner that
// turns them into per-seed CSVs, summary.json and curve.svg. The schema is
// documented in README.md.

#include "pmpo/em_exact.hpp"
#include "pmpo/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pmpo {

enum class Regime { Bandit, Mdp, Sequence, Offline, EmExact };

Regime parse_regime(std::string_view name);
std::string_view to_string(Regime regime);

struct OfflineSpec {
  GridworldSpec grid = GridworldSpec::default_8x8();
  double corruption_fraction = 0.7;
  std::size_t episodes = 1400;
  std::size_t labeled_episodes = 400;
  std::size_t max_steps = 50;
  std::size_t eval_episodes = 100;
};

struct EmExactSpec {
  std::size_t support_size = 16;
  double tau = 1.0;
  std::size_t max_iters = 10'000;
  double f_low = -5.0;
  double f_high = 5.0;
};

struct ExperimentConfig {
  std::string name;
  Regime regime = Regime::Bandit;
  BenchmarkFunction bandit;
  BanditOptions bandit_options;
  GridworldSpec grid = GridworldSpec::default_8x8();
  MdpOptions mdp_options;
  SequenceTask sequence;
  SequenceOptions sequence_options;
  OfflineSpec offline;
  EmExactSpec em;
  TrainerConfig trainer;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "runs";
  bool log_y = false;
  nlohmann::json environment_echo;  // the environment section as written
  nlohmann::json source;            // the whole document, echoed into summary.json
};

struct ParseResult {
  std::optional<ExperimentConfig> config;  // set only when violations is empty
  std::vector<std::string> violations;
};

// Full schema and cross-field validation; collects every violation.
ParseResult parse_experiment(const nlohmann::json& doc);
// Reads and parses a file. Unreadable files or invalid JSON come back as a
// single violation.
ParseResult parse_experiment_file(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::vector<std::uint64_t>> seeds;
  bool quiet = false;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  double initial_metric = 0.0;
  double final_metric = 0.0;
  bool collapsed = false;
  bool halted = false;
  std::string collapse_reason;
  std::size_t iterations_run = 0;
  double wall_ms = 0.0;
  bool monotone = true;  // em-exact only
  std::vector<double> metric_curve;
};

struct ExperimentOutcome {
  std::filesystem::path output_dir;
  std::vector<SeedSummary> seeds;
  nlohmann::json summary;
};

// Runs every seed and writes seed_<n>.csv, summary.json and curve.svg.
// Throws ConfigError for data-dependent configuration problems.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

// Runs each config (all must share regime and environment) and writes
// compare.svg and compare.json into output_dir. Throws InputError on a
// regime or environment mismatch.
nlohmann::json compare_experiments(const std::vector<ExperimentConfig>& configs, const RunOptions& options,
                                   std::ostream& log);

// Parses "0,1,2", "0-9" or a mix such as "0-3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Offline-mixture column name in the loss-mixture table layout.
std::string mixture_label(const TrainerConfig& trainer);

}  // namespace pmpo

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rewardlab/agents.hpp"
#include "rewardlab/env.hpp"
#include "rewardlab/noise.hpp"
#include "rewardlab/tabular.hpp"

namespace rewardlab {

enum class SuiteErrorCode { MalformedConfig, UnknownPreset, WriteFailure, UndefinedScore };

class SuiteError : public std::runtime_error {
 public:
  SuiteError(SuiteErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  SuiteErrorCode code() const { return code_; }

 private:
  SuiteErrorCode code_;
};

// Process exit codes of the lab tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIo = 4;
int exit_code_for(SuiteErrorCode code);

// 100 * (ours - best) / |best - random|. Throws SuiteError(UndefinedScore)
// when best == random.
double normalized_improvement(double ours, double best_baseline, double random_policy);

// Mean true return of uniformly random actions over `episodes` episodes.
double random_policy_baseline(std::string_view env, const EnvOptions& options, int episodes,
                              std::uint64_t seed);

enum class SuiteKind { Train, Tabular };

// One flat key=value file fully determines a suite. See README for keys.
struct SuiteConfig {
  std::string id = "suite";
  SuiteKind kind = SuiteKind::Train;
  std::string env = "pointmass";
  EnvOptions env_options;
  NoiseModel noise_template;           // kind and uniform bounds
  std::vector<double> noise_levels = {0.0};
  std::vector<std::uint64_t> seeds = {0};
  int workers = 1;
  int random_episodes = 100;
  // train suites
  TrainConfig train;
  std::vector<RewardSource> sources = {RewardSource::sampled()};
  std::string baseline = "sampled";
  // tabular suites
  std::vector<double> alphas = default_alpha_grid();
  int episodes = 100;
  KeyMode key_mode = KeyMode::S;
  std::filesystem::path results_path = "results.csv";
  std::filesystem::path summary_path = "summary.csv";

  std::map<std::string, std::string> entries;  // as parsed, trimmed

  std::string canonical_text() const;  // sorted key=value lines
  std::string hash() const;            // 16 hex digits of FNV-1a 64 over canonical_text
};

// Throws SuiteError(MalformedConfig / UnknownPreset).
SuiteConfig parse_suite_config(std::string_view text);
SuiteConfig load_suite_config(const std::filesystem::path& path);

struct RunRecord {
  std::string suite;
  std::string config_hash;
  std::string env;
  std::string algo;
  std::string noise;
  std::string source;
  std::uint64_t seed = 0;
  CheckpointRecord checkpoint;
};

std::string run_record_csv_header();
std::string to_csv_row(const RunRecord& r);

struct SummaryRow {
  std::string noise;
  double level = 0.0;
  std::string source;
  int seeds = 0;
  int diverged_seeds = 0;
  double seed_mean_return = 0.0;
  double baseline_return = 0.0;
  double random_return = 0.0;
  double improvement = 0.0;  // percent; NaN when undefined
};

std::string summary_csv_header();
std::string to_csv_row(const SummaryRow& r);

struct TabularSummaryRow {
  std::string noise;
  double alpha = 0.0;
  std::string source;
  int seeds = 0;
  double mean_rmse = 0.0;       // seed mean of per-run mean RMSE
  int estimator_wins = 0;       // seeds where the estimator beat the sampled learner
};

std::string tabular_summary_csv_header();
std::string to_csv_row(const TabularSummaryRow& r);

struct SuiteOutcome {
  std::vector<RunRecord> records;             // train suites
  std::vector<TabularRecord> tabular_records;  // tabular suites
  std::vector<std::string> tabular_noise;      // noise label per tabular record
  std::vector<SummaryRow> summary;
  std::vector<TabularSummaryRow> tabular_summary;
  int exit_code = kExitOk;
};

// Runs every (noise level, source, seed) cell and writes the results and
// summary CSVs. Output bytes depend only on the config.
SuiteOutcome run_suite(const SuiteConfig& config);
SuiteOutcome run_suite(const std::filesystem::path& config_path);

// Writes text to path; throws SuiteError(WriteFailure).
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rewardlab

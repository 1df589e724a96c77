#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "airfed/budget.hpp"
#include "airfed/fl_core.hpp"

namespace airfed {

/// A complete experiment. Parsed from flat `key = value` text; every key has a
/// default (see README for the table).
struct Scenario {
  std::uint64_t seed = 1;
  std::size_t rounds = 50;
  ModelSpec model{ModelKind::logistic, 10, 8, 0.01};
  std::size_t clients = 4;
  std::size_t samples_per_client = 100;
  /// Overrides samples_per_client when non-empty.
  std::vector<std::size_t> client_sizes;
  double label_noise = 0.1;
  double feature_skew = 0.0;
  TrainConfig train{0.1, 0, 1, 1};
  RoundConfig round;
  ChannelConfig channel;
  double delay_mean = 1.0;
  double delay_jitter = 0.0;
  /// Loss level for the rounds-to-threshold column of `compare`.
  double target_loss = 0.0;
  std::string out_dir = "airfed_out";

  PartitionSpec partition() const;
  /// Auto cs_measurements (0) resolves to ceil(d / 10).
  Federation federation() const;
  TrainingSetup setup() const;
  /// Cross-field checks; throws ConfigError naming the offending key.
  void validate() const;
};

/// Throws ConfigError with "line N" for syntax and unknown keys, and with the
/// key name for invalid values.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct RunOutput {
  Scenario scenario;
  TrainingResult training;
  BudgetLedger ledger;
  BudgetLedger baseline;
  std::optional<Ratio> gain;
  std::optional<double> final_loss;
  std::optional<std::size_t> rounds_to_target;
};

RunOutput execute(const Scenario& scenario);

std::string rounds_csv(const RunOutput& run);
std::string budget_csv(const RunOutput& run);
std::string summary_text(const RunOutput& run);

/// Writes rounds.csv, budget.csv and summary.txt into `dir` (created if
/// missing). Throws IoError.
void write_artifacts(const RunOutput& run, const std::filesystem::path& dir);

struct ComparisonRow {
  std::string scheme;
  std::string codec;
  std::optional<double> final_loss;
  std::optional<std::size_t> rounds_to_threshold;
  std::uint64_t total_uses = 0;
  std::optional<Ratio> gain;
};

/// Throws ConfigError if the scenarios differ in model, data, optimizer, seed
/// or horizon.
void check_comparable(std::span<const Scenario> scenarios);

struct Comparison {
  std::vector<RunOutput> runs;
  std::vector<ComparisonRow> rows;
};

/// Runs every scenario; gains are relative to the first one.
Comparison compare(std::span<const Scenario> scenarios);

/// Columns: scheme,codec,final_loss,rounds_to_threshold,total_uses,gain
std::string comparison_csv(std::span<const ComparisonRow> rows);

}  // namespace airfed

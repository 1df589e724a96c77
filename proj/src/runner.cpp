#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "airfed/error.hpp"
#include "airfed/scenario.hpp"

namespace airfed {

namespace {

std::string num(double x) { return fmt::format("{}", x); }

template <typename T>
std::string opt(const std::optional<T>& v) {
  return v ? fmt::format("{}", *v) : std::string("NA");
}

std::string gain_str(const std::optional<Ratio>& g) { return g ? g->str() : std::string("NA"); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << content;
  out.flush();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace

RunOutput execute(const Scenario& scenario) {
  scenario.validate();
  RunOutput out;
  out.scenario = scenario;
  out.training = run_training(scenario.setup());
  const auto& records = out.training.records;
  out.ledger = ledger_from_records(records);
  out.baseline = baseline_ledger(records, scenario.model.dimension());
  out.gain = communication_gain(out.baseline, out.ledger);
  if (!records.empty()) out.final_loss = records.back().global_loss;
  for (const auto& r : records) {
    if (r.global_loss <= scenario.target_loss) {
      out.rounds_to_target = r.round;
      break;
    }
  }
  return out;
}

std::string rounds_csv(const RunOutput& run) {
  std::string s = "round,global_loss,aggregation_error,participants,uplink_uses,uplink_bits\n";
  for (const auto& r : run.training.records)
    s += fmt::format("{},{},{},{},{},{}\n", r.round, num(r.global_loss), num(r.aggregation_error),
                     fmt::join(r.participants, ";"), r.uplink_uses, r.uplink_bits);
  return s;
}

std::string budget_csv(const RunOutput& run) {
  std::ostringstream s;
  run.ledger.write_csv(s);
  return s.str();
}

std::string summary_text(const RunOutput& run) {
  const auto& sc = run.scenario;
  const auto& t = run.ledger.totals();
  std::string s;
  s += fmt::format("scheme = {}\n", transport_name(sc.round.transport.kind));
  s += fmt::format("codec = {}\n", codec_label(sc.round.codec));
  s += fmt::format("rounds = {}\n", run.training.records.size());
  s += fmt::format("dimension = {}\n", sc.model.dimension());
  s += fmt::format("final_loss = {}\n", opt(run.final_loss));
  s += fmt::format("total_uplink_uses = {}\n", t.uplink_uses);
  s += fmt::format("total_uplink_bits = {}\n", t.uplink_bits);
  s += fmt::format("total_downlink_bits = {}\n", t.downlink_bits);
  s += fmt::format("baseline_uplink_uses = {}\n", run.baseline.totals().uplink_uses);
  s += fmt::format("communication_gain = {}\n", gain_str(run.gain));
  return s;
}

void write_artifacts(const RunOutput& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  write_file(dir / "rounds.csv", rounds_csv(run));
  write_file(dir / "budget.csv", budget_csv(run));
  write_file(dir / "summary.txt", summary_text(run));
}

void check_comparable(std::span<const Scenario> scenarios) {
  if (scenarios.empty()) throw ConfigError("compare needs at least one scenario");
  const Scenario& a = scenarios.front();
  for (std::size_t i = 1; i < scenarios.size(); ++i) {
    const Scenario& b = scenarios[i];
    auto mismatch = [&](const char* key) {
      throw ConfigError(fmt::format("scenario {} differs from scenario 0 in shared field '{}'", i, key));
    };
    if (a.seed != b.seed) mismatch("seed");
    if (a.rounds != b.rounds) mismatch("rounds");
    if (a.model.kind != b.model.kind) mismatch("model");
    if (a.model.input_dim != b.model.input_dim) mismatch("features");
    if (a.model.kind == ModelKind::mlp && a.model.hidden != b.model.hidden) mismatch("hidden");
    if (a.model.l2 != b.model.l2) mismatch("l2");
    if (a.partition().sizes != b.partition().sizes) mismatch("clients");
    if (a.label_noise != b.label_noise) mismatch("label_noise");
    if (a.feature_skew != b.feature_skew) mismatch("feature_skew");
    if (a.train.step_size != b.train.step_size) mismatch("mu");
    if (a.train.batch_size != b.train.batch_size) mismatch("batch");
    if (a.train.local_steps != b.train.local_steps) mismatch("local_steps");
  }
}

Comparison compare(std::span<const Scenario> scenarios) {
  check_comparable(scenarios);
  Comparison out;
  for (const auto& sc : scenarios) out.runs.push_back(execute(sc));
  const BudgetLedger& reference = out.runs.front().ledger;
  for (const auto& run : out.runs) {
    ComparisonRow row;
    row.scheme = std::string(transport_name(run.scenario.round.transport.kind));
    row.codec = codec_label(run.scenario.round.codec);
    row.final_loss = run.final_loss;
    row.rounds_to_threshold = run.rounds_to_target;
    row.total_uses = run.ledger.totals().uplink_uses;
    row.gain = communication_gain(reference, run.ledger);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string comparison_csv(std::span<const ComparisonRow> rows) {
  std::string s = "scheme,codec,final_loss,rounds_to_threshold,total_uses,gain\n";
  for (const auto& r : rows)
    s += fmt::format("{},{},{},{},{},{}\n", r.scheme, r.codec, opt(r.final_loss), opt(r.rounds_to_threshold),
                     r.total_uses, gain_str(r.gain));
  return s;
}

}  // namespace airfed

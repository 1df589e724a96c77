#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "airfed/error.hpp"
#include "airfed/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kIoError = 2;

struct Options {
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

airfed::Scenario load(const std::string& path, const Options& opt) {
  airfed::Scenario s = airfed::load_scenario(path);
  if (opt.seed) s.seed = *opt.seed;
  if (!opt.out.empty()) s.out_dir = opt.out;
  return s;
}

int cmd_run(const std::string& path, const Options& opt) {
  const auto scenario = load(path, opt);
  const auto run = airfed::execute(scenario);
  airfed::write_artifacts(run, scenario.out_dir);
  if (!opt.quiet) std::cout << airfed::summary_text(run) << "artifacts written to " << scenario.out_dir << '\n';
  return kOk;
}

int cmd_validate(const std::string& path, const Options& opt) {
  load(path, opt);
  if (!opt.quiet) std::cout << path << ": ok\n";
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const Options& opt) {
  std::vector<airfed::Scenario> scenarios;
  for (const auto& p : paths) scenarios.push_back(load(p, opt));
  const auto result = airfed::compare(scenarios);

  const std::filesystem::path dir = opt.out.empty() ? std::filesystem::path(scenarios.front().out_dir) : std::filesystem::path(opt.out);
  for (std::size_t i = 0; i < result.runs.size(); ++i)
    airfed::write_artifacts(result.runs[i], dir / ("run_" + std::to_string(i)));
  const auto csv = airfed::comparison_csv(result.rows);
  {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(dir / "comparison.csv", std::ios::binary | std::ios::trunc);
    if (!out || !(out << csv)) throw airfed::IoError("cannot write " + (dir / "comparison.csv").string());
  }
  if (!opt.quiet) std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"airfed: federated learning over wireless channels"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory (overrides the scenario's `out`)");
    sub->add_option("--seed", opt.seed, "Master seed (overrides the scenario's `seed`)");
    sub->add_flag("--quiet", opt.quiet, "Suppress console output");
  };

  std::string file;
  std::vector<std::string> files;
  auto* run = app.add_subcommand("run", "Run one scenario and write rounds.csv, budget.csv, summary.txt");
  run->add_option("scenario", file, "Scenario file")->required();
  add_common(run);
  auto* compare = app.add_subcommand("compare", "Run several scenarios and write comparison.csv");
  compare->add_option("scenarios", files, "Scenario files")->required();
  add_common(compare);
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
  validate->add_option("scenario", file, "Scenario file")->required();
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(file, opt);
    if (*compare) return cmd_compare(files, opt);
    return cmd_validate(file, opt);
  } catch (const airfed::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const airfed::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

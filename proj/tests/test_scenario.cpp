#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "doctest.h"

#include "airfed/error.hpp"
#include "airfed/scenario.hpp"

using namespace airfed;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_scenario(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kSmall = R"(
# small logistic federation
seed = 5
rounds = 12
model = logistic
features = 6
clients = 4
samples_per_client = 30
mu = 0.3
antennas = 4
)";

}  // namespace

TEST_CASE("scenario parsing") {
  const Scenario defaults;
  const auto s = parse_scenario("seed = 1\n");
  CHECK(s.seed == 1);
  CHECK(s.rounds == defaults.rounds);
  CHECK(s.clients == defaults.clients);
  CHECK(s.model.kind == defaults.model.kind);
  CHECK(s.train.step_size == defaults.train.step_size);
  CHECK(s.round.transport.kind == TransportKind::ideal_digital);
  CHECK(s.round.codec.is_noop());

  const auto full = parse_scenario(
      "seed = 9  # trailing comment\n"
      "model = mlp\nhidden = 3\nfeatures = 2\nclient_sizes = 5, 6, 7\nclients = 3\n"
      "batch = 4\nlocal_steps = 2\nscheme = cs-over-the-air\nsparsifier = topk\ntopk_fraction = 0.1\n"
      "quantizer = three\nerror_feedback = on\nmomentum = 0.5\nclip_norm = 2\nwarmup = 0.5, 0.25\n"
      "deadline = 1.5\nselection = channel\nparticipation = 0.5\ncs_measurements = 4\n");
  CHECK(full.model.kind == ModelKind::mlp);
  CHECK(full.model.dimension() == 3 * 2 + 2 * 3 + 1);
  CHECK(full.partition().sizes == std::vector<std::size_t>{5, 6, 7});
  CHECK(full.train.batch_size == 4);
  CHECK(full.round.codec.quantizer == Quantizer::three_level);
  CHECK(full.round.codec.error_feedback);
  CHECK(full.round.codec.warmup == std::vector<double>{0.5, 0.25});
  CHECK(full.round.deadline == 1.5);
  CHECK(full.round.selection == SelectionMode::channel_aware);
  CHECK(full.federation().round.transport.cs_measurements == 4);
  CHECK_NOTHROW(full.validate());

  CHECK(parse_scenario("features = 25\nscheme = cs-over-the-air\nsparsifier = topk\n")
            .federation().round.transport.cs_measurements == 3);

  CHECK(error_of("mu = -0.1\n").find("mu") != std::string::npos);
  const auto unknown = error_of("seed = 1\nunknown_key = 3\n");
  CHECK(unknown.find("unknown_key") != std::string::npos);
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(error_of("seed = 1\nseed = 2\n").find("duplicate") != std::string::npos);
  CHECK(error_of("rounds = many\n").find("rounds") != std::string::npos);
  CHECK(error_of("just text\n").find("line 1") != std::string::npos);
  CHECK(error_of("scheme = carrier-pigeon\n").find("scheme") != std::string::npos);
  CHECK(error_of("participation = 0\n").find("participation") != std::string::npos);
  CHECK(error_of("scheme = cs-over-the-air\n").find("sparsifier") != std::string::npos);
  CHECK(error_of("features = 4\nscheme = cs-over-the-air\nsparsifier = topk\ncs_measurements = 4\n")
            .find("cs_measurements") != std::string::npos);
  CHECK(error_of("payload = weights\nscheme = over-the-air\n").find("payload") != std::string::npos);

  CHECK_THROWS_AS(load_scenario("/nonexistent/dir/x.scn"), IoError);
}

TEST_CASE("run artifacts") {
  auto sc = parse_scenario(kSmall);
  SUBCASE("zero rounds gives header-only files") {
    sc.rounds = 0;
    const auto run = execute(sc);
    CHECK(rounds_csv(run) == "round,global_loss,aggregation_error,participants,uplink_uses,uplink_bits\n");
    CHECK(budget_csv(run) == "round,scheme,uplink_uses,uplink_bits,downlink_bits\n");
    CHECK(summary_text(run).find("final_loss = NA") != std::string::npos);
  }
  SUBCASE("reruns are byte-identical on disk") {
    sc.round.transport.kind = TransportKind::over_the_air;
    sc.channel.noise_std = 0.05;
    sc.round.participation = 0.75;
    sc.delay_jitter = 0.5;
    sc.round.deadline = 1.3;
    const auto base = std::filesystem::temp_directory_path() / "airfed_test_rerun";
    std::filesystem::remove_all(base);
    write_artifacts(execute(sc), base / "a");
    write_artifacts(execute(sc), base / "b");
    for (const char* f : {"rounds.csv", "budget.csv", "summary.txt"}) {
      const auto a = slurp(base / "a" / f);
      CHECK(a.size() > 60);
      CHECK(a == slurp(base / "b" / f));
    }
    std::filesystem::remove_all(base);
  }
  SUBCASE("paired over-the-air summary gain equals K") {
    sc.round.transport.kind = TransportKind::over_the_air;
    const auto run = execute(sc);
    CHECK(summary_text(run).find("communication_gain = 4\n") != std::string::npos);
  }
  SUBCASE("every summary number is recomputable from the CSVs") {
    sc.round.transport.kind = TransportKind::cs_over_the_air;
    sc.round.codec.sparsifier = Sparsifier::topk;
    sc.round.codec.topk_fraction = 0.34;
    sc.round.codec.error_feedback = true;
    sc.round.period = 2;
    const auto run = execute(sc);
    std::uint64_t uses = 0, bits = 0, down = 0, base = 0;
    for (const auto& r : csv_rows(budget_csv(run))) {
      uses += std::stoull(r[2]);
      bits += std::stoull(r[3]);
      down += std::stoull(r[4]);
    }
    std::string last_loss;
    for (const auto& r : csv_rows(rounds_csv(run))) {
      last_loss = r[1];
      if (!r[3].empty()) base += static_cast<std::uint64_t>(std::count(r[3].begin(), r[3].end(), ';') + 1) * 6;
    }
    const std::string text = summary_text(run);
    CHECK(text.find(fmt::format("final_loss = {}\n", last_loss)) != std::string::npos);
    CHECK(text.find(fmt::format("total_uplink_uses = {}\n", uses)) != std::string::npos);
    CHECK(text.find(fmt::format("total_uplink_bits = {}\n", bits)) != std::string::npos);
    CHECK(text.find(fmt::format("total_downlink_bits = {}\n", down)) != std::string::npos);
    CHECK(text.find(fmt::format("baseline_uplink_uses = {}\n", base)) != std::string::npos);
    CHECK(text.find(fmt::format("communication_gain = {}\n", Ratio::of(base, uses).str())) != std::string::npos);
    CHECK(text.find("dimension = 6\n") != std::string::npos);
  }
  SUBCASE("unwritable output directory is an I/O error") {
    CHECK_THROWS_AS(write_artifacts(execute(sc), "/proc/airfed_cannot_exist"), IoError);
  }
}

TEST_CASE("scenario comparison") {
  const auto base = parse_scenario(kSmall);
  SUBCASE("self comparison") {
    const std::vector<Scenario> list{base, base};
    const auto c = compare(list);
    CHECK(c.rows[1].gain == Ratio{1, 1});
    CHECK(c.rows[0].final_loss == c.rows[1].final_loss);
  }
  SUBCASE("baseline against noiseless over-the-air") {
    auto ota = base;
    ota.round.transport.kind = TransportKind::over_the_air;
    const std::vector<Scenario> list{base, ota};
    const auto c = compare(list);
    CHECK(c.rows[0].gain == Ratio{1, 1});
    CHECK(c.rows[1].gain == Ratio{4, 1});
    const auto& a = c.runs[0].training.records;
    const auto& b = c.runs[1].training.records;
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(std::abs(a[t].global_loss - b[t].global_loss) < 1e-6);
    CHECK(comparison_csv(c.rows).rfind("scheme,codec,final_loss,rounds_to_threshold,total_uses,gain\n", 0) == 0);
  }
  SUBCASE("client sweep") {
    for (std::size_t K : {5U, 10U, 20U}) {
      auto b = base;
      b.clients = K;
      b.rounds = 3;
      auto o = b;
      o.round.transport.kind = TransportKind::over_the_air;
      const std::vector<Scenario> list{b, o};
      CHECK(compare(list).rows[1].gain == Ratio{K, 1});
    }
  }
  SUBCASE("mismatched shared fields") {
    auto other = base;
    other.train.step_size = 0.1;
    const std::vector<Scenario> list{base, other};
    try {
      compare(list);
      FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("mu") != std::string::npos);
    }
  }
}

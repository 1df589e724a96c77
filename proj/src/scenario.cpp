#include "airfed/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "airfed/error.hpp"

namespace airfed {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError(fmt::format("{}: invalid value '{}' ({})", key, value, why));
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "expected a number");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "expected a non-negative integer");
  return out;
}

std::size_t to_positive(std::string_view key, std::string_view v) {
  const auto n = to_u64(key, v);
  if (n == 0) bad_value(key, v, "must be at least 1");
  return static_cast<std::size_t>(n);
}

double to_positive_real(std::string_view key, std::string_view v) {
  const double x = to_double(key, v);
  if (!(x > 0.0)) bad_value(key, v, "must be positive");
  return x;
}

double to_nonnegative_real(std::string_view key, std::string_view v) {
  const double x = to_double(key, v);
  if (!(x >= 0.0)) bad_value(key, v, "must be non-negative");
  return x;
}

double to_fraction(std::string_view key, std::string_view v) {
  const double x = to_double(key, v);
  if (!(x > 0.0 && x <= 1.0)) bad_value(key, v, "must lie in (0, 1]");
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  bad_value(key, v, "expected on/off");
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

using Setter = std::function<void(Scenario&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](Scenario& s, auto k, auto v) { s.seed = to_u64(k, v); }},
      {"rounds", [](Scenario& s, auto k, auto v) { s.rounds = static_cast<std::size_t>(to_u64(k, v)); }},
      {"model",
       [](Scenario& s, auto k, auto v) {
         if (v == "linear") s.model.kind = ModelKind::linear;
         else if (v == "logistic") s.model.kind = ModelKind::logistic;
         else if (v == "mlp") s.model.kind = ModelKind::mlp;
         else bad_value(k, v, "expected linear, logistic or mlp");
       }},
      {"features", [](Scenario& s, auto k, auto v) { s.model.input_dim = to_positive(k, v); }},
      {"hidden", [](Scenario& s, auto k, auto v) { s.model.hidden = to_positive(k, v); }},
      {"l2", [](Scenario& s, auto k, auto v) { s.model.l2 = to_nonnegative_real(k, v); }},
      {"clients", [](Scenario& s, auto k, auto v) { s.clients = to_positive(k, v); }},
      {"samples_per_client", [](Scenario& s, auto k, auto v) { s.samples_per_client = to_positive(k, v); }},
      {"client_sizes",
       [](Scenario& s, auto k, auto v) {
         s.client_sizes.clear();
         for (auto item : split_list(v)) s.client_sizes.push_back(to_positive(k, item));
       }},
      {"label_noise", [](Scenario& s, auto k, auto v) { s.label_noise = to_nonnegative_real(k, v); }},
      {"feature_skew", [](Scenario& s, auto k, auto v) { s.feature_skew = to_nonnegative_real(k, v); }},
      {"mu", [](Scenario& s, auto k, auto v) { s.train.step_size = to_positive_real(k, v); }},
      {"batch",
       [](Scenario& s, auto k, auto v) { s.train.batch_size = v == "full" ? 0 : to_positive(k, v); }},
      {"local_steps", [](Scenario& s, auto k, auto v) { s.train.local_steps = to_positive(k, v); }},
      {"payload",
       [](Scenario& s, auto k, auto v) {
         if (v == "weights") s.round.payload = PayloadMode::weights;
         else if (v == "gradients") s.round.payload = PayloadMode::gradients;
         else bad_value(k, v, "expected weights or gradients");
       }},
      {"period", [](Scenario& s, auto k, auto v) { s.round.period = to_positive(k, v); }},
      {"deadline",
       [](Scenario& s, auto k, auto v) {
         if (v == "none") s.round.deadline.reset();
         else s.round.deadline = to_nonnegative_real(k, v);
       }},
      {"participation", [](Scenario& s, auto k, auto v) { s.round.participation = to_fraction(k, v); }},
      {"selection",
       [](Scenario& s, auto k, auto v) {
         if (v == "random") s.round.selection = SelectionMode::random;
         else if (v == "channel") s.round.selection = SelectionMode::channel_aware;
         else bad_value(k, v, "expected random or channel");
       }},
      {"delay_mean", [](Scenario& s, auto k, auto v) { s.delay_mean = to_nonnegative_real(k, v); }},
      {"delay_jitter", [](Scenario& s, auto k, auto v) { s.delay_jitter = to_nonnegative_real(k, v); }},
      {"sparsifier",
       [](Scenario& s, auto k, auto v) {
         if (v == "none") s.round.codec.sparsifier = Sparsifier::none;
         else if (v == "threshold") s.round.codec.sparsifier = Sparsifier::threshold;
         else if (v == "topk") s.round.codec.sparsifier = Sparsifier::topk;
         else bad_value(k, v, "expected none, threshold or topk");
       }},
      {"threshold", [](Scenario& s, auto k, auto v) { s.round.codec.threshold = to_nonnegative_real(k, v); }},
      {"topk_fraction", [](Scenario& s, auto k, auto v) { s.round.codec.topk_fraction = to_fraction(k, v); }},
      {"quantizer",
       [](Scenario& s, auto k, auto v) {
         if (v == "none") s.round.codec.quantizer = Quantizer::none;
         else if (v == "binary") s.round.codec.quantizer = Quantizer::binary;
         else if (v == "three") s.round.codec.quantizer = Quantizer::three_level;
         else if (v == "four") s.round.codec.quantizer = Quantizer::four_level;
         else bad_value(k, v, "expected none, binary, three or four");
       }},
      {"error_feedback", [](Scenario& s, auto k, auto v) { s.round.codec.error_feedback = to_bool(k, v); }},
      {"momentum",
       [](Scenario& s, auto k, auto v) {
         const double m = to_nonnegative_real(k, v);
         if (m >= 1.0) bad_value(k, v, "must lie in [0, 1)");
         s.round.codec.momentum = m;
       }},
      {"clip_norm", [](Scenario& s, auto k, auto v) { s.round.codec.clip_norm = to_nonnegative_real(k, v); }},
      {"warmup",
       [](Scenario& s, auto k, auto v) {
         s.round.codec.warmup.clear();
         if (v == "none") return;
         for (auto item : split_list(v)) s.round.codec.warmup.push_back(to_fraction(k, item));
       }},
      {"scheme",
       [](Scenario& s, auto k, auto v) {
         try {
           s.round.transport.kind = parse_transport(v);
         } catch (const ConfigError&) {
           bad_value(k, v, "expected ideal-digital, over-the-air or cs-over-the-air");
         }
       }},
      {"antennas", [](Scenario& s, auto k, auto v) { s.channel.antennas = to_positive(k, v); }},
      {"noise_std", [](Scenario& s, auto k, auto v) { s.channel.noise_std = to_nonnegative_real(k, v); }},
      {"p_max", [](Scenario& s, auto k, auto v) { s.channel.p_max = to_positive_real(k, v); }},
      {"cs_measurements",
       [](Scenario& s, auto k, auto v) { s.round.transport.cs_measurements = static_cast<std::size_t>(to_u64(k, v)); }},
      {"target_loss", [](Scenario& s, auto k, auto v) { s.target_loss = to_nonnegative_real(k, v); }},
      {"out", [](Scenario& s, auto, auto v) { s.out_dir = std::string(v); }},
  };
  return table;
}

}  // namespace

PartitionSpec Scenario::partition() const {
  PartitionSpec p;
  p.sizes = client_sizes.empty() ? std::vector<std::size_t>(clients, samples_per_client) : client_sizes;
  p.dim = model.input_dim;
  p.labels = model.kind == ModelKind::linear ? LabelRule::real : LabelRule::binary;
  p.label_noise = label_noise;
  p.skew = feature_skew;
  return p;
}

Federation Scenario::federation() const {
  Federation f;
  f.model = model;
  f.train = train;
  f.train.seed = seed;
  f.round = round;
  if (f.round.transport.kind == TransportKind::cs_over_the_air && f.round.transport.cs_measurements == 0)
    f.round.transport.cs_measurements = (model.dimension() + 9) / 10;
  f.channel = channel;
  f.seed = seed;
  return f;
}

TrainingSetup Scenario::setup() const {
  TrainingSetup s;
  s.fed = federation();
  s.datasets = make_synthetic(partition(), seed);
  s.rounds = rounds;
  s.delay_mean = delay_mean;
  s.delay_jitter = delay_jitter;
  return s;
}

void Scenario::validate() const {
  if (!client_sizes.empty() && client_sizes.size() != clients)
    throw ConfigError(fmt::format("client_sizes: expected {} entries (one per client), got {}", clients,
                                  client_sizes.size()));
  const std::size_t d = model.dimension();
  if (round.payload == PayloadMode::weights) {
    if (round.transport.analog()) throw ConfigError("payload: analog schemes require payload = gradients");
    if (!round.codec.is_noop()) throw ConfigError("payload: compression requires payload = gradients");
  }
  if (round.transport.kind == TransportKind::cs_over_the_air) {
    if (round.codec.sparsifier == Sparsifier::none)
      throw ConfigError("sparsifier: cs-over-the-air requires threshold or topk");
    if (round.transport.cs_measurements >= d || (round.transport.cs_measurements == 0 && d < 2))
      throw ConfigError(fmt::format("cs_measurements: must be below the model dimension {} (no compression achieved)", d));
  }
  if (train.batch_size > 0) {
    const auto sizes = partition().sizes;
    for (auto n : sizes)
      if (train.batch_size > n) throw ConfigError(fmt::format("batch: {} exceeds a client's {} samples", train.batch_size, n));
  }
  federation().validate();
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("line {}: expected 'key = value', got '{}'", line_no, line));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("line {}: missing key", line_no));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    if (value.empty()) throw ConfigError(fmt::format("line {}: {}: missing value", line_no, key));
    it->second(s, key, value);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read scenario file '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace airfed

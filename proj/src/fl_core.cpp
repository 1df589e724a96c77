#include "airfed/fl_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "airfed/error.hpp"
#include "airfed/kernels.hpp"

namespace airfed {

namespace {

void check_uploads(std::span<const WeightedParams> list) {
  if (list.empty()) throw ProtocolError("no uploads arrived");
  const std::size_t d = list.front().values.size();
  double total = 0.0;
  for (const auto& e : list) {
    if (e.values.size() != d) throw ConfigError("uploaded vectors differ in length");
    if (!(e.size >= 0.0)) throw ConfigError("dataset sizes must be non-negative");
    total += e.size;
  }
  if (!(total > 0.0)) throw ProtocolError("aggregation weights sum to zero");
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void RoundConfig::validate() const {
  if (period == 0) throw ConfigError("aggregation period must be at least 1");
  if (!(participation > 0.0 && participation <= 1.0)) throw ConfigError("participation fraction must lie in (0, 1]");
  if (deadline && !(*deadline >= 0.0)) throw ConfigError("straggler deadline must be non-negative");
  codec.validate();
  if (payload == PayloadMode::weights) {
    if (transport.analog()) throw ConfigError("analog transport requires gradient payloads");
    if (!codec.is_noop()) throw ConfigError("compression requires gradient payloads");
  }
  if (transport.kind == TransportKind::cs_over_the_air && codec.sparsifier == Sparsifier::none)
    throw ConfigError("cs-over-the-air requires a sparsifying codec");
}

void Federation::validate() const {
  model.validate();
  train.validate();
  round.validate();
  if (channel.antennas == 0) throw ConfigError("antenna count must be at least 1");
  if (!(channel.noise_std >= 0.0)) throw ConfigError("noise standard deviation must be non-negative");
  if (!(channel.p_max > 0.0)) throw ConfigError("maximum transmit power must be positive");
  if (round.transport.kind == TransportKind::cs_over_the_air &&
      (round.transport.cs_measurements == 0 || round.transport.cs_measurements >= model.dimension()))
    throw ConfigError("cs measurement count must lie in [1, d): no compression achieved");
}

ParamVector aggregate_weights(std::span<const WeightedParams> locals) {
  check_uploads(locals);
  double total = 0.0;
  for (const auto& e : locals) total += e.size;
  ParamVector out(locals.front().values.size(), 0.0);
  for (const auto& e : locals) {
    const double c = e.size / total;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * e.values[i];
  }
  return out;
}

ParamVector aggregate_gradients(std::span<const double> w_prev, std::span<const WeightedParams> grads, double mu) {
  const ParamVector mean = aggregate_weights(grads);
  if (mean.size() != w_prev.size()) throw ConfigError("gradient length does not match parameters");
  ParamVector out(w_prev.begin(), w_prev.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= mu * mean[i];
  return out;
}

std::vector<double> normalized_weights(std::span<const ClientState> clients, std::span<const std::size_t> ids) {
  std::vector<double> w(clients.size(), 0.0);
  double total = 0.0;
  for (auto k : ids) total += static_cast<double>(clients[k].data.size());
  if (!(total > 0.0)) return w;
  for (auto k : ids) w[k] = static_cast<double>(clients[k].data.size()) / total;
  return w;
}

std::vector<std::size_t> select_participants(std::size_t num_clients, double fraction, std::uint64_t seed,
                                             SelectionMode mode, std::span<const double> channel_norms) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("participation fraction must lie in (0, 1]");
  const auto wanted = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(num_clients) - 1e-9));
  const std::size_t count = std::clamp<std::size_t>(wanted, 1, num_clients);

  std::vector<std::size_t> ids(num_clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (count == num_clients) return ids;

  if (mode == SelectionMode::channel_aware) {
    if (channel_norms.size() != num_clients) throw ConfigError("channel-aware selection needs one norm per client");
    std::stable_sort(ids.begin(), ids.end(),
                     [&](std::size_t a, std::size_t b) { return channel_norms[a] > channel_norms[b]; });
  } else {
    Rng rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<double> sample_delays(std::span<const ClientState> clients, std::span<const std::size_t> ids, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> out;
  out.reserve(ids.size());
  for (auto k : ids) out.push_back(std::max(0.0, clients[k].delay_mean + clients[k].delay_jitter * u(rng)));
  return out;
}

std::vector<std::size_t> apply_deadline(std::span<const std::size_t> ids, std::span<const double> delays,
                                        std::optional<double> deadline) {
  if (ids.size() != delays.size()) throw ConfigError("one delay per client expected");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (!(delays[j] >= 0.0)) throw ConfigError("delays must be non-negative");
    if (!deadline || delays[j] <= *deadline) out.push_back(ids[j]);
  }
  return out;
}

std::vector<ClientState> make_clients(std::vector<Dataset> datasets, const Federation& fed, double delay_mean,
                                      double delay_jitter) {
  const ParamVector w0 = initial_params(fed.model, derive_seed(fed.seed, Stream::init, 0));
  std::vector<ClientState> clients(datasets.size());
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    datasets[k].validate();
    auto& c = clients[k];
    c.id = k;
    c.data = std::move(datasets[k]);
    c.local = w0;
    c.codec = EncoderState(w0.size());
    c.delay_mean = delay_mean;
    c.delay_jitter = delay_jitter;
    c.sampler = BatchSampler(derive_seed(fed.seed, Stream::client, k));
  }
  return clients;
}

ServerState make_server(const Federation& fed, std::size_t num_clients) {
  ServerState s;
  s.w = initial_params(fed.model, derive_seed(fed.seed, Stream::init, 0));
  s.weights.assign(num_clients, num_clients ? 1.0 / static_cast<double>(num_clients) : 0.0);
  return s;
}

namespace {

double pooled_loss(const ModelSpec& spec, std::span<const double> w, std::span<const ClientState> clients) {
  double weighted = 0.0, total = 0.0;
  for (const auto& c : clients) {
    const auto n = static_cast<double>(c.data.size());
    weighted += n * local_loss(spec, w, c.data);
    total += n;
  }
  return weighted / total;
}

void broadcast(const ServerState& server, std::span<ClientState> clients) {
  for (auto& c : clients) c.local = server.w;
}

}  // namespace

RoundRecord run_round(ServerState& server, std::span<ClientState> clients, const Federation& fed) {
  const std::size_t K = clients.size();
  const std::size_t d = server.w.size();
  const std::size_t t = server.round + 1;
  const RoundConfig& rc = fed.round;

  RoundRecord rec;
  rec.round = t;
  rec.scheme = rc.transport.kind;

  const bool needs_channel = rc.transport.analog() || rc.selection == SelectionMode::channel_aware;
  ChannelRealization ch;
  if (needs_channel)
    ch = sample_channel(K, fed.channel.antennas, fed.channel.noise_std, derive_seed(fed.seed, Stream::channel, t));

  const auto participants =
      select_participants(K, rc.participation, derive_seed(fed.seed, Stream::selection, t), rc.selection,
                          needs_channel ? ch.gain_norms() : std::vector<double>{});
  kernels::local_updates(fed.exec, fed.model, fed.train, clients, participants);

  if (t % rc.period != 0) {
    rec.global_loss = pooled_loss(fed.model, server.w, clients);
    server.round = t;
    return rec;
  }

  Rng delay_rng = make_rng(fed.seed, Stream::delay, t);
  const auto delays = sample_delays(clients, participants, delay_rng);
  const auto survivors = apply_deadline(participants, delays, rc.deadline);

  if (survivors.empty()) {
    rec.event = "no_uploads";
  } else {
    const double mu = fed.train.step_size;
    const std::size_t epoch = t / rc.period - 1;
    std::vector<Upload> uploads(survivors.size());
    for (std::size_t j = 0; j < survivors.size(); ++j) {
      auto& c = clients[survivors[j]];
      auto& u = uploads[j];
      u.client = c.id;
      u.size = static_cast<double>(c.data.size());
      if (rc.payload == PayloadMode::weights) {
        u.exact = c.local;
        EncoderState none;
        u.payload = encode(u.exact, CodecSpec{}, none);
      } else {
        u.exact.resize(d);
        for (std::size_t i = 0; i < d; ++i) u.exact[i] = (server.w[i] - c.local[i]) / mu;
        u.payload = encode(u.exact, rc.codec, c.codec, epoch);
      }
    }

    TransportConfig transport = rc.transport;
    std::optional<AggregationDesign> design;
    server.weights = normalized_weights(clients, survivors);
    if (transport.analog()) {
      std::vector<double> targets;
      for (auto k : survivors) targets.push_back(server.weights[k]);
      try {
        design = solve_aggregation_weights(ch, survivors, targets, fed.channel.p_max);
        server.weights.assign(K, 0.0);
        for (std::size_t j = 0; j < design->selected.size(); ++j) server.weights[design->selected[j]] = design->targets[j];
      } catch (const SchemeError&) {
        transport.kind = TransportKind::ideal_digital;
        rec.event = "scheme_fallback";
      }
    }

    const TransmitResult tx = transmit_round(uploads, transport, ch, design ? &*design : nullptr,
                                             derive_seed(fed.seed, Stream::noise, t), fed.exec);
    ParamVector next;
    if (rc.payload == PayloadMode::weights) {
      next = tx.aggregate;
    } else {
      next = server.w;
      for (std::size_t i = 0; i < d; ++i) next[i] -= mu * tx.aggregate[i];
    }
    if (all_finite(next)) {
      server.w = std::move(next);
    } else {
      rec.event = "non_finite_update";
    }

    rec.scheme = transport.kind;
    rec.aggregated = true;
    rec.aggregation_error = tx.aggregation_error;
    rec.participants = survivors;
    if (design) rec.excluded = design->excluded;
    for (const auto& u : uploads) rec.upload_bits.push_back(u.payload.payload_bits);
    rec.uplink_uses = tx.channel_uses;
    rec.uplink_bits = tx.bits;
  }

  broadcast(server, clients);
  rec.downlink_bits = d * kFullPrecisionBits;
  rec.global_loss = pooled_loss(fed.model, server.w, clients);
  server.round = t;
  return rec;
}

TrainingResult run_training(const TrainingSetup& setup) {
  setup.fed.validate();
  if (setup.datasets.empty()) throw ConfigError("training needs at least one client");
  auto clients = make_clients(setup.datasets, setup.fed, setup.delay_mean, setup.delay_jitter);
  auto server = make_server(setup.fed, clients.size());

  TrainingResult out;
  out.records.reserve(setup.rounds);
  for (std::size_t t = 0; t < setup.rounds; ++t) out.records.push_back(run_round(server, clients, setup.fed));
  out.final_params = server.w;
  return out;
}

}  // namespace airfed

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "airfed/channel.hpp"
#include "airfed/client.hpp"
#include "airfed/compression.hpp"
#include "airfed/model.hpp"
#include "airfed/rng.hpp"

namespace airfed {

struct ServerState {
  ParamVector w;
  /// Number of completed rounds; the next round produces w(round + 1).
  std::size_t round = 0;
  /// Length K, zero for clients outside the last aggregation.
  std::vector<double> weights;
};

enum class PayloadMode { weights, gradients };
enum class SelectionMode { random, channel_aware };

struct RoundConfig {
  PayloadMode payload = PayloadMode::gradients;
  /// Aggregate on rounds t with t % period == 0.
  std::size_t period = 1;
  std::optional<double> deadline;
  double participation = 1.0;
  SelectionMode selection = SelectionMode::random;
  TransportConfig transport;
  CodecSpec codec;

  void validate() const;
};

struct ChannelConfig {
  std::size_t antennas = 4;
  double noise_std = 0.0;
  double p_max = 1.0;
};

/// Everything a round needs besides mutable state.
struct Federation {
  ModelSpec model;
  TrainConfig train;
  RoundConfig round;
  ChannelConfig channel;
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;
  bool aggregated = false;
  double global_loss = 0.0;
  double aggregation_error = 0.0;
  /// Clients that beat the deadline and uploaded, ascending.
  std::vector<std::size_t> participants;
  /// Participants the analog power solver left out of the aggregate.
  std::vector<std::size_t> excluded;
  /// Payload bits per participant, aligned with `participants`.
  std::vector<std::uint64_t> upload_bits;
  std::uint64_t uplink_uses = 0;
  std::uint64_t uplink_bits = 0;
  std::uint64_t downlink_bits = 0;
  TransportKind scheme = TransportKind::ideal_digital;
  /// Empty, "no_uploads" or "scheme_fallback".
  std::string event;
};

struct WeightedParams {
  std::span<const double> values;
  double size = 0.0;
};

/// sum_k |D_k| w_k / sum_k |D_k| in list order.
ParamVector aggregate_weights(std::span<const WeightedParams> locals);

/// w_prev - mu * (size-weighted mean of gradients).
ParamVector aggregate_gradients(std::span<const double> w_prev, std::span<const WeightedParams> grads,
                                double mu);

/// |D_k| / sum over `ids`, written at position k of a length-K vector.
std::vector<double> normalized_weights(std::span<const ClientState> clients, std::span<const std::size_t> ids);

/// max(1, ceil(fraction * K)) clients. Random mode shuffles with `seed`;
/// channel-aware mode ranks by channel norm descending, ties to the lower id.
/// Returned ids are ascending.
std::vector<std::size_t> select_participants(std::size_t num_clients, double fraction, std::uint64_t seed,
                                             SelectionMode mode, std::span<const double> channel_norms = {});

/// delay_k = mean_k + jitter_k * u, u ~ U[-1, 1], clamped at 0.
std::vector<double> sample_delays(std::span<const ClientState> clients, std::span<const std::size_t> ids,
                                  Rng& rng);

/// Ids whose delay is within the deadline (all of them without one).
std::vector<std::size_t> apply_deadline(std::span<const std::size_t> ids, std::span<const double> delays,
                                        std::optional<double> deadline);

std::vector<ClientState> make_clients(std::vector<Dataset> datasets, const Federation& fed,
                                      double delay_mean = 0.0, double delay_jitter = 0.0);
ServerState make_server(const Federation& fed, std::size_t num_clients);

/// One federated round: local update, upload, aggregation, broadcast.
/// Protocol and scheme failures are recorded in RoundRecord::event.
RoundRecord run_round(ServerState& server, std::span<ClientState> clients, const Federation& fed);

struct TrainingSetup {
  Federation fed;
  std::vector<Dataset> datasets;
  std::size_t rounds = 0;
  double delay_mean = 0.0;
  double delay_jitter = 0.0;
};

struct TrainingResult {
  std::vector<RoundRecord> records;
  ParamVector final_params;
};

TrainingResult run_training(const TrainingSetup& setup);

}  // namespace airfed

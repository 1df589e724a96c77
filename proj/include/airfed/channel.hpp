#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "airfed/compression.hpp"
#include "airfed/model.hpp"
#include "airfed/rng.hpp"

namespace airfed {

/// Block-fading real channel: row k of `gains` is h_k (length N).
struct ChannelRealization {
  Eigen::MatrixXd gains;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  std::size_t clients() const { return static_cast<std::size_t>(gains.rows()); }
  std::size_t antennas() const { return static_cast<std::size_t>(gains.cols()); }
  Eigen::VectorXd gain(std::size_t k) const { return gains.row(static_cast<Eigen::Index>(k)).transpose(); }
  std::vector<double> gain_norms() const;
};

/// Entries i.i.d. N(0, 1) drawn from `seed`.
ChannelRealization sample_channel(std::size_t clients, std::size_t antennas, double noise_std,
                                  std::uint64_t seed);

/// CSV with header `id,h_1,...,h_N` and one row per client.
void write_channel_csv(std::ostream& out, const ChannelRealization& ch);
ChannelRealization read_channel_csv(std::istream& in, double noise_std = 0.0);

struct PowerAllocation {
  /// Indexed by client id; zero for clients not transmitting.
  std::vector<double> power;
  double p_max = 1.0;
};

struct Beamformer {
  Eigen::VectorXd m;
};

/// One channel use: x = sum_k h_k sqrt(p_k) values[j] + n, where clients[j]
/// names the transmitter of values[j] and n ~ N(0, noise_std^2 I).
Eigen::VectorXd ota_superpose(std::span<const double> values, const PowerAllocation& power,
                              const ChannelRealization& ch, std::span<const std::size_t> clients,
                              Rng& rng);

double beamform_combine(const Eigen::VectorXd& x, const Beamformer& m);

/// Receive beamformer and transmit powers satisfying m^T h_k sqrt(p_k) = c_k.
struct AggregationDesign {
  Beamformer beamformer;
  PowerAllocation power;
  /// Surviving clients, ascending.
  std::vector<std::size_t> selected;
  /// Renormalized targets aligned with `selected`.
  std::vector<double> targets;
  /// |m^T h_k sqrt(p_k) - c_k| aligned with `selected`.
  std::vector<double> residuals;
  std::vector<std::size_t> excluded;
};

inline constexpr double kGainFloor = 1e-9;

/// Minimum-norm m with m^T h_k = 1 when N >= K (principal direction of
/// sum h_k h_k^T otherwise), sqrt(p_k) = c_k / (m^T h_k), then iteratively drop
/// clients whose effective gain is <= kGainFloor or whose power exceeds p_max
/// and renormalize the targets. Throws SchemeError if nobody survives.
AggregationDesign solve_aggregation_weights(const ChannelRealization& ch,
                                            std::span<const std::size_t> candidates,
                                            std::span<const double> targets, double p_max);

enum class TransportKind { ideal_digital, over_the_air, cs_over_the_air };

std::string_view transport_name(TransportKind kind);
TransportKind parse_transport(std::string_view name);

struct TransportConfig {
  TransportKind kind = TransportKind::ideal_digital;
  std::size_t cs_measurements = 0;

  bool analog() const { return kind != TransportKind::ideal_digital; }
};

/// One client's upload: the exact (pre-codec) payload and what the codec made
/// of it.
struct Upload {
  std::size_t client = 0;
  double size = 0.0;
  ParamVector exact;
  CompressedGradient payload;
};

struct TransmitResult {
  ParamVector aggregate;
  std::uint64_t channel_uses = 0;
  std::uint64_t bits = 0;
  /// ||aggregate - size-weighted mean of exact payloads||_2
  double aggregation_error = 0.0;
};

/// Gaussian m x d matrix with N(0, 1/m) entries.
Eigen::MatrixXd sensing_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Orthogonal matching pursuit: grows the support greedily by largest
/// normalized correlation with the residual (ties to the lower column), refits
/// by least squares, and stops at `max_support` columns or once
/// ||r|| <= rel_tol * ||y||.
ParamVector omp_recover(const Eigen::MatrixXd& A, std::span<const double> y, std::size_t max_support,
                        double rel_tol = 1e-8);

/// Moves one round of uploads to the server.
///  - ideal_digital: exact weighted aggregate over orthogonal links;
///    uses = sum of payload symbols.
///  - over_the_air: decoded payloads superposed element by element with the
///    design's powers and beamformer; uses = d.
///  - cs_over_the_air: decoded payloads projected by a shared sensing matrix,
///    projections superposed, aggregate recovered by OMP; uses = m_cs.
/// Analog schemes need `design`. Noise and sensing draws derive from round_seed.
TransmitResult transmit_round(std::span<const Upload> uploads, const TransportConfig& transport,
                              const ChannelRealization& ch, const AggregationDesign* design,
                              std::uint64_t round_seed, Exec exec = Exec::parallel);

}  // namespace airfed

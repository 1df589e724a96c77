#include "airfed/channel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "airfed/error.hpp"
#include "airfed/kernels.hpp"

namespace airfed {

std::vector<double> ChannelRealization::gain_norms() const {
  std::vector<double> out(clients());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = gains.row(static_cast<Eigen::Index>(k)).norm();
  return out;
}

ChannelRealization sample_channel(std::size_t clients, std::size_t antennas, double noise_std,
                                  std::uint64_t seed) {
  if (clients == 0 || antennas == 0) throw ConfigError("channel needs at least one client and one antenna");
  if (!(noise_std >= 0.0)) throw ConfigError("noise standard deviation must be non-negative");
  ChannelRealization ch;
  ch.gains.resize(static_cast<Eigen::Index>(clients), static_cast<Eigen::Index>(antennas));
  ch.noise_std = noise_std;
  ch.seed = seed;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < ch.gains.rows(); ++k)
    for (Eigen::Index a = 0; a < ch.gains.cols(); ++a) ch.gains(k, a) = normal(rng);
  return ch;
}

void write_channel_csv(std::ostream& out, const ChannelRealization& ch) {
  out << "id";
  for (std::size_t a = 0; a < ch.antennas(); ++a) out << ",h_" << (a + 1);
  out << '\n';
  for (std::size_t k = 0; k < ch.clients(); ++k) {
    out << k;
    for (std::size_t a = 0; a < ch.antennas(); ++a)
      out << ',' << fmt::format("{}", ch.gains(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)));
    out << '\n';
  }
}

ChannelRealization read_channel_csv(std::istream& in, double noise_std) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("channel CSV is empty");
  const auto antennas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (antennas == 0 || line.rfind("id", 0) != 0) throw ConfigError("channel CSV header must be id,h_1..h_N");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (std::stoul(cell) != rows.size())
      throw ConfigError(fmt::format("channel CSV line {}: client ids must be 0..K-1 in order", line_no));
    std::vector<double> h;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size() || !std::isfinite(v))
        throw ConfigError(fmt::format("channel CSV line {}: bad gain '{}'", line_no, cell));
      h.push_back(v);
    }
    if (h.size() != antennas)
      throw ConfigError(fmt::format("channel CSV line {}: expected {} gains", line_no, antennas));
    rows.push_back(std::move(h));
  }
  if (rows.empty()) throw ConfigError("channel CSV has no clients");

  ChannelRealization ch;
  ch.noise_std = noise_std;
  ch.gains.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(antennas));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t a = 0; a < antennas; ++a)
      ch.gains(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = rows[k][a];
  return ch;
}

Eigen::VectorXd ota_superpose(std::span<const double> values, const PowerAllocation& power,
                              const ChannelRealization& ch, std::span<const std::size_t> clients,
                              Rng& rng) {
  if (values.size() != clients.size()) throw ConfigError("one value per transmitting client expected");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ch.antennas()));
  if (ch.noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, ch.noise_std);
    for (Eigen::Index a = 0; a < x.size(); ++a) x(a) = normal(rng);
  }
  for (std::size_t j = 0; j < clients.size(); ++j) {
    const std::size_t k = clients[j];
    if (k >= ch.clients()) throw ConfigError("transmitting client is not in the channel realization");
    x += ch.gain(k) * (std::sqrt(power.power.at(k)) * values[j]);
  }
  return x;
}

double beamform_combine(const Eigen::VectorXd& x, const Beamformer& m) {
  if (x.size() != m.m.size()) throw ConfigError("beamformer length does not match antenna count");
  return m.m.dot(x);
}

AggregationDesign solve_aggregation_weights(const ChannelRealization& ch,
                                            std::span<const std::size_t> candidates,
                                            std::span<const double> targets, double p_max) {
  if (candidates.size() != targets.size()) throw ConfigError("one target per candidate client expected");
  if (!(p_max > 0.0)) throw ConfigError("maximum transmit power must be positive");

  std::vector<std::size_t> active(candidates.begin(), candidates.end());
  std::vector<double> base(targets.begin(), targets.end());
  std::vector<std::size_t> excluded;
  const auto N = static_cast<Eigen::Index>(ch.antennas());

  for (std::size_t iter = 0; iter <= candidates.size(); ++iter) {
    if (active.empty()) throw SchemeError("no client can meet the aggregation constraint within its power cap");

    double total = 0.0;
    for (double c : base) total += c;
    std::vector<double> tgt(base.size());
    for (std::size_t j = 0; j < base.size(); ++j) tgt[j] = base[j] / total;

    const auto kc = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd H(kc, N);
    for (Eigen::Index j = 0; j < kc; ++j) H.row(j) = ch.gains.row(static_cast<Eigen::Index>(active[j]));

    Eigen::VectorXd m;
    if (N >= kc) {
      m = H.completeOrthogonalDecomposition().solve(Eigen::VectorXd::Ones(kc));
    } else {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H.transpose() * H);
      m = eig.eigenvectors().col(N - 1).normalized();
      if ((H * m).sum() < 0.0) m = -m;
    }
    const Eigen::VectorXd effective = H * m;

    std::vector<std::size_t> keep;
    std::vector<double> keep_base;
    std::vector<double> power(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) {
      const double g = effective(static_cast<Eigen::Index>(j));
      const double amp = g > kGainFloor ? tgt[j] / g : 0.0;
      power[j] = amp * amp;
      if (g > kGainFloor && power[j] <= p_max) {
        keep.push_back(active[j]);
        keep_base.push_back(base[j]);
      } else {
        excluded.push_back(active[j]);
      }
    }

    if (keep.size() == active.size()) {
      AggregationDesign out;
      out.beamformer.m = std::move(m);
      out.power.p_max = p_max;
      out.power.power.assign(ch.clients(), 0.0);
      out.selected = active;
      out.targets = tgt;
      for (std::size_t j = 0; j < active.size(); ++j) {
        out.power.power[active[j]] = power[j];
        const double achieved = effective(static_cast<Eigen::Index>(j)) * std::sqrt(power[j]);
        out.residuals.push_back(std::abs(achieved - tgt[j]));
      }
      std::sort(excluded.begin(), excluded.end());
      out.excluded = std::move(excluded);
      return out;
    }
    active = std::move(keep);
    base = std::move(keep_base);
  }
  throw InternalError("aggregation weight solver did not converge");
}

std::string_view transport_name(TransportKind kind) {
  switch (kind) {
    case TransportKind::ideal_digital: return "ideal-digital";
    case TransportKind::over_the_air: return "over-the-air";
    case TransportKind::cs_over_the_air: return "cs-over-the-air";
  }
  return "unknown";
}

TransportKind parse_transport(std::string_view name) {
  if (name == "ideal-digital") return TransportKind::ideal_digital;
  if (name == "over-the-air") return TransportKind::over_the_air;
  if (name == "cs-over-the-air") return TransportKind::cs_over_the_air;
  throw ConfigError(fmt::format("unknown transport scheme '{}'", name));
}

Eigen::MatrixXd sensing_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = normal(rng);
  return A;
}

namespace {

ParamVector exact_aggregate(std::span<const Upload> uploads) {
  double total = 0.0;
  for (const auto& u : uploads) total += u.size;
  ParamVector out(uploads.front().exact.size(), 0.0);
  for (const auto& u : uploads) {
    const double c = u.size / total;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * u.exact[i];
  }
  return out;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct AnalogLink {
  Eigen::MatrixXd gains;
  std::vector<double> amplitudes;
  std::vector<ParamVector> decoded;
  std::size_t kept = 0;
};

AnalogLink prepare_link(std::span<const Upload> uploads, const ChannelRealization& ch,
                        const AggregationDesign& design) {
  AnalogLink link;
  link.gains.resize(static_cast<Eigen::Index>(design.selected.size()), ch.gains.cols());
  for (std::size_t j = 0; j < design.selected.size(); ++j) {
    const std::size_t k = design.selected[j];
    const auto it = std::find_if(uploads.begin(), uploads.end(), [&](const Upload& u) { return u.client == k; });
    if (it == uploads.end()) throw ConfigError("design selects a client that did not upload");
    link.gains.row(static_cast<Eigen::Index>(j)) = ch.gains.row(static_cast<Eigen::Index>(k));
    link.amplitudes.push_back(std::sqrt(design.power.power.at(k)));
    link.decoded.push_back(decode(it->payload));
    link.kept += it->payload.count();
  }
  return link;
}

Eigen::MatrixXd draw_noise(std::size_t uses, std::size_t antennas, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return {};
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::MatrixXd n(static_cast<Eigen::Index>(uses), static_cast<Eigen::Index>(antennas));
  for (Eigen::Index i = 0; i < n.rows(); ++i)
    for (Eigen::Index a = 0; a < n.cols(); ++a) n(i, a) = normal(rng);
  return n;
}

}  // namespace

TransmitResult transmit_round(std::span<const Upload> uploads, const TransportConfig& transport,
                              const ChannelRealization& ch, const AggregationDesign* design,
                              std::uint64_t round_seed, Exec exec) {
  if (uploads.empty()) throw ProtocolError("no uploads arrived");
  const std::size_t d = uploads.front().exact.size();
  TransmitResult out;

  if (transport.kind == TransportKind::ideal_digital) {
    std::vector<CompressedGradient> payloads;
    std::vector<double> sizes;
    for (const auto& u : uploads) {
      payloads.push_back(u.payload);
      sizes.push_back(u.size);
      out.channel_uses += u.payload.payload_symbols();
      out.bits += u.payload.payload_bits;
    }
    out.aggregate = decode_and_accumulate(payloads, sizes);
  } else {
    if (design == nullptr) throw SchemeError("analog transport needs a beamformer and power allocation");
    const AnalogLink link = prepare_link(uploads, ch, *design);
    const std::uint64_t noise_seed = derive_seed(round_seed, Stream::noise, 0);

    if (transport.kind == TransportKind::over_the_air) {
      const Eigen::MatrixXd noise = draw_noise(d, ch.antennas(), ch.noise_std, noise_seed);
      out.aggregate = kernels::superpose_and_combine(exec, link.gains, link.amplitudes, link.decoded, noise,
                                                     design->beamformer.m);
      out.channel_uses = d;
    } else {
      const std::size_t m_cs = transport.cs_measurements;
      if (m_cs == 0 || m_cs >= d) throw ConfigError("cs measurement count must lie in [1, d): no compression achieved");
      const Eigen::MatrixXd A = sensing_matrix(m_cs, d, derive_seed(round_seed, Stream::sensing, 0));
      std::vector<ParamVector> projected;
      projected.reserve(link.decoded.size());
      for (const auto& g : link.decoded) {
        const Eigen::VectorXd p = A * Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(d));
        projected.emplace_back(p.data(), p.data() + p.size());
      }
      const Eigen::MatrixXd noise = draw_noise(m_cs, ch.antennas(), ch.noise_std, noise_seed);
      const auto y = kernels::superpose_and_combine(exec, link.gains, link.amplitudes, projected, noise,
                                                    design->beamformer.m);
      out.aggregate = omp_recover(A, y, std::min(link.kept, m_cs));
      out.channel_uses = m_cs;
    }
    out.bits = out.channel_uses * kFullPrecisionBits;
  }

  out.aggregation_error = distance(out.aggregate, exact_aggregate(uploads));
  return out;
}

}  // namespace airfed

#include "airfed/compression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "airfed/error.hpp"

namespace airfed {

namespace {

std::size_t scale_count(Quantizer q) {
  switch (q) {
    case Quantizer::none: return 0;
    case Quantizer::binary:
    case Quantizer::three_level: return 1;
    case Quantizer::four_level: return 2;
  }
  return 0;
}

double mean_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

std::uint64_t compute_payload_bits(const CompressedGradient& c) {
  const std::uint64_t per_symbol = symbol_bits(c.codec.quantizer);
  if (c.dense) return static_cast<std::uint64_t>(c.length) * per_symbol + kHeaderBits;
  return static_cast<std::uint64_t>(c.count()) * (index_bits(c.length) + per_symbol) + kHeaderBits;
}

CompressedGradient gather(std::span<const double> g, std::vector<std::uint32_t> indices,
                          Sparsifier sparsifier, bool dense) {
  CompressedGradient c;
  c.codec = {sparsifier, Quantizer::none};
  c.length = static_cast<std::uint32_t>(g.size());
  c.dense = dense;
  c.indices = std::move(indices);
  c.values.reserve(c.indices.size());
  for (auto i : c.indices) c.values.push_back(g[i]);
  c.payload_bits = compute_payload_bits(c);
  return c;
}

CompressedGradient dense_payload(std::span<const double> g) {
  std::vector<std::uint32_t> all(g.size());
  std::iota(all.begin(), all.end(), 0u);
  return gather(g, std::move(all), Sparsifier::none, true);
}

}  // namespace

std::uint64_t symbol_bits(Quantizer q) {
  switch (q) {
    case Quantizer::none: return kFullPrecisionBits;
    case Quantizer::binary: return 1;
    case Quantizer::three_level:
    case Quantizer::four_level: return 2;
  }
  return kFullPrecisionBits;
}

std::uint64_t index_bits(std::size_t d) {
  if (d <= 2) return 1;
  return static_cast<std::uint64_t>(std::bit_width(d - 1));
}

std::uint64_t CompressedGradient::payload_symbols() const {
  const std::uint64_t body = payload_bits - kHeaderBits;
  return (body + kFullPrecisionBits - 1) / kFullPrecisionBits;
}

bool CodecSpec::is_noop() const {
  return sparsifier == Sparsifier::none && quantizer == Quantizer::none && !error_feedback &&
         clip_norm == 0.0;
}

void CodecSpec::validate() const {
  if (sparsifier == Sparsifier::threshold && !(threshold >= 0.0))
    throw ConfigError("sparsification threshold must be non-negative");
  if (sparsifier == Sparsifier::topk && !(topk_fraction > 0.0 && topk_fraction <= 1.0))
    throw ConfigError("top-k fraction must lie in (0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum factor must lie in [0, 1)");
  if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm)) throw ConfigError("clip norm must be non-negative");
  for (double r : warmup)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("warm-up fractions must lie in (0, 1]");
}

std::string codec_label(const CodecSpec& spec) {
  std::string s;
  switch (spec.sparsifier) {
    case Sparsifier::none: s = "dense"; break;
    case Sparsifier::threshold: s = "threshold"; break;
    case Sparsifier::topk: s = "topk"; break;
  }
  switch (spec.quantizer) {
    case Quantizer::none: break;
    case Quantizer::binary: s += "+binary"; break;
    case Quantizer::three_level: s += "+three"; break;
    case Quantizer::four_level: s += "+four"; break;
  }
  if (spec.error_feedback) s += "+ef";
  if (spec.momentum > 0.0) s += "+momentum";
  if (spec.clip_norm > 0.0) s += "+clip";
  return s;
}

std::size_t topk_count(std::size_t d, double fraction) {
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(d) - 1e-9));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(d, 1));
}

CompressedGradient sparsify_threshold(std::span<const double> g, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("sparsification threshold must be non-negative");
  std::vector<std::uint32_t> kept;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g[i]) > tau) kept.push_back(static_cast<std::uint32_t>(i));
  return gather(g, std::move(kept), Sparsifier::threshold, false);
}

CompressedGradient sparsify_topk(std::span<const double> g, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("top-k fraction must lie in (0, 1]");
  const std::size_t k = std::min(topk_count(g.size(), fraction), g.size());
  std::vector<std::uint32_t> order(g.size());
  std::iota(order.begin(), order.end(), 0u);
  auto larger = [&](std::uint32_t a, std::uint32_t b) {
    const double fa = std::abs(g[a]), fb = std::abs(g[b]);
    return fa != fb ? fa > fb : a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), larger);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return gather(g, std::move(order), Sparsifier::topk, false);
}

Quantized quantize(std::span<const double> values, Quantizer q) {
  Quantized out;
  out.symbols.resize(values.size(), 0);
  switch (q) {
    case Quantizer::none:
      throw ConfigError("quantize called without a quantizer");
    case Quantizer::binary: {
      out.scales = {mean_abs(values)};
      for (std::size_t i = 0; i < values.size(); ++i) out.symbols[i] = values[i] < 0.0 ? -1 : 1;
      break;
    }
    case Quantizer::three_level: {
      // First pass decides the zero band from the mean magnitude of all
      // entries; the scale is then the mean magnitude of the survivors.
      const double half = 0.5 * mean_abs(values);
      double sum = 0.0;
      std::size_t kept = 0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double a = std::abs(values[i]);
        if (a <= half) continue;
        out.symbols[i] = values[i] < 0.0 ? -1 : 1;
        sum += a;
        ++kept;
      }
      out.scales = {kept ? sum / static_cast<double>(kept) : 0.0};
      break;
    }
    case Quantizer::four_level: {
      const double split = mean_abs(values);
      double lo = 0.0, hi = 0.0;
      std::size_t n_lo = 0, n_hi = 0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double a = std::abs(values[i]);
        const std::int8_t sign = values[i] < 0.0 ? -1 : 1;
        if (a > split) {
          out.symbols[i] = static_cast<std::int8_t>(2 * sign);
          hi += a;
          ++n_hi;
        } else {
          out.symbols[i] = sign;
          lo += a;
          ++n_lo;
        }
      }
      out.scales = {n_lo ? lo / static_cast<double>(n_lo) : 0.0,
                    n_hi ? hi / static_cast<double>(n_hi) : 0.0};
      break;
    }
  }
  return out;
}

double dequantize(std::int8_t symbol, std::span<const double> scales, Quantizer q) {
  switch (q) {
    case Quantizer::none: throw ConfigError("dequantize called without a quantizer");
    case Quantizer::binary:
    case Quantizer::three_level: return scales[0] * symbol;
    case Quantizer::four_level:
      if (symbol == 1 || symbol == -1) return scales[0] * symbol;
      return scales[1] * (symbol > 0 ? 1.0 : -1.0);
  }
  return 0.0;
}

void apply_quantizer(CompressedGradient& c, Quantizer q) {
  c.codec.quantizer = q;
  if (q == Quantizer::none) {
    c.payload_bits = compute_payload_bits(c);
    return;
  }
  if (c.values.empty()) {
    c.symbols.clear();
    c.scales.assign(scale_count(q), 0.0);
  } else {
    auto qz = quantize(c.values, q);
    c.symbols = std::move(qz.symbols);
    c.scales = std::move(qz.scales);
  }
  c.values.clear();
  c.payload_bits = compute_payload_bits(c);
}

CompressedGradient encode(std::span<const double> g, const CodecSpec& spec, EncoderState& state,
                          std::size_t epoch) {
  const std::size_t d = g.size();
  if (state.residual.size() != d || state.momentum.size() != d) {
    if (!state.residual.empty() || !state.momentum.empty())
      throw ConfigError("encoder state length does not match gradient length");
    state = EncoderState(d);
  }

  ParamVector work(g.begin(), g.end());
  if (spec.clip_norm > 0.0) {
    double norm = 0.0;
    for (double x : work) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > spec.clip_norm) {
      const double s = spec.clip_norm / norm;
      for (auto& x : work) x *= s;
    }
  }

  std::span<const double> target = work;
  if (spec.error_feedback) {
    for (std::size_t i = 0; i < d; ++i) {
      state.momentum[i] = spec.momentum * state.momentum[i] + work[i];
      state.residual[i] += state.momentum[i];
    }
    target = state.residual;
  }

  CompressedGradient c;
  switch (spec.sparsifier) {
    case Sparsifier::none: c = dense_payload(target); break;
    case Sparsifier::threshold: c = sparsify_threshold(target, spec.threshold); break;
    case Sparsifier::topk: {
      double fraction = spec.topk_fraction;
      if (!spec.warmup.empty()) fraction = spec.warmup[std::min(epoch, spec.warmup.size() - 1)];
      c = sparsify_topk(target, fraction);
      break;
    }
  }
  apply_quantizer(c, spec.quantizer);

  if (spec.error_feedback) {
    for (std::size_t j = 0; j < c.count(); ++j) {
      const auto i = c.indices[j];
      const double sent =
          spec.quantizer == Quantizer::none ? c.values[j] : dequantize(c.symbols[j], c.scales, spec.quantizer);
      state.residual[i] -= sent;
      state.momentum[i] = 0.0;
    }
  }
  return c;
}

ParamVector decode(const CompressedGradient& c) {
  ParamVector out(c.length, 0.0);
  const bool quantized = c.codec.quantizer != Quantizer::none;
  for (std::size_t j = 0; j < c.count(); ++j)
    out[c.indices[j]] = quantized ? dequantize(c.symbols[j], c.scales, c.codec.quantizer) : c.values[j];
  return out;
}

ParamVector decode_and_accumulate(std::span<const CompressedGradient> payloads,
                                  std::span<const double> sizes) {
  if (payloads.empty()) throw ProtocolError("no uploads arrived");
  if (sizes.size() != payloads.size()) throw ConfigError("payload and size lists differ in length");
  const auto& first = payloads.front();
  double total = 0.0;
  for (std::size_t k = 0; k < payloads.size(); ++k) {
    if (!(payloads[k].codec == first.codec)) throw ProtocolError("codec mismatch across client payloads");
    if (payloads[k].length != first.length) throw ProtocolError("payload length mismatch across clients");
    total += sizes[k];
  }
  if (!(total > 0.0)) throw ProtocolError("aggregation weights sum to zero");

  ParamVector out(first.length, 0.0);
  for (std::size_t k = 0; k < payloads.size(); ++k) {
    const ParamVector dense = decode(payloads[k]);
    const double c = sizes[k] / total;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * dense[i];
  }
  return out;
}

double compression_ratio(const CompressedGradient& c) {
  return static_cast<double>(c.payload_bits) /
         (static_cast<double>(c.length) * static_cast<double>(kFullPrecisionBits));
}

}  // namespace airfed

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "airfed/model.hpp"

namespace airfed {

enum class Sparsifier : std::uint8_t { none = 0, threshold = 1, topk = 2 };

/// Enumerator values are the level counts.
enum class Quantizer : std::uint8_t { none = 0, binary = 2, three_level = 3, four_level = 4 };

/// Bits charged for codec metadata (codec id, length, scales) on every payload.
inline constexpr std::uint64_t kHeaderBits = 64;
/// Full-precision symbol width; also the digital channel-use unit.
inline constexpr std::uint64_t kFullPrecisionBits = 64;

struct CodecId {
  Sparsifier sparsifier = Sparsifier::none;
  Quantizer quantizer = Quantizer::none;

  bool operator==(const CodecId&) const = default;
};

std::uint64_t symbol_bits(Quantizer q);
/// ceil(log2 d), with a floor of 1 bit so that d = 1 still carries an index.
std::uint64_t index_bits(std::size_t d);

/// A compressed gradient. Dense payloads (no sparsifier) list every index but
/// are charged no index cost.
///
/// payload_bits = count * (index_bits(d) + symbol_bits) + kHeaderBits  (sparse)
///              = d * symbol_bits + kHeaderBits                         (dense)
struct CompressedGradient {
  CodecId codec;
  std::uint32_t length = 0;
  bool dense = false;
  std::vector<std::uint32_t> indices;
  /// Full-precision kept values; empty when quantized.
  std::vector<double> values;
  /// Quantized symbols aligned with indices; empty when not quantized.
  std::vector<std::int8_t> symbols;
  std::vector<double> scales;
  std::uint64_t payload_bits = 0;

  std::size_t count() const { return indices.size(); }
  /// Payload size in 64-bit channel symbols, header excluded.
  std::uint64_t payload_symbols() const;
};

struct CodecSpec {
  Sparsifier sparsifier = Sparsifier::none;
  double threshold = 0.0;
  double topk_fraction = 1.0;
  Quantizer quantizer = Quantizer::none;
  bool error_feedback = false;
  /// DGC momentum correction factor in [0, 1).
  double momentum = 0.0;
  /// L2 clipping norm; 0 disables clipping.
  double clip_norm = 0.0;
  /// Per-epoch top-k fractions; the last entry holds afterwards.
  std::vector<double> warmup;

  CodecId id() const { return {sparsifier, quantizer}; }
  bool is_noop() const;
  void validate() const;
};

std::string codec_label(const CodecSpec& spec);

/// Per-client encoder memory: v (residual) and u (momentum), both length d.
struct EncoderState {
  ParamVector residual;
  ParamVector momentum;

  EncoderState() = default;
  explicit EncoderState(std::size_t d) : residual(d, 0.0), momentum(d, 0.0) {}
};

struct Quantized {
  std::vector<std::int8_t> symbols;
  std::vector<double> scales;
};

CompressedGradient sparsify_threshold(std::span<const double> g, double tau);
CompressedGradient sparsify_topk(std::span<const double> g, double fraction);
/// Number of coordinates kept by top-k: max(1, ceil(fraction * d)).
std::size_t topk_count(std::size_t d, double fraction);

Quantized quantize(std::span<const double> values, Quantizer q);
double dequantize(std::int8_t symbol, std::span<const double> scales, Quantizer q);

/// Quantize the kept values of `c` in place and recompute its payload size.
void apply_quantizer(CompressedGradient& c, Quantizer q);

/// Compression pipeline: clip, momentum-corrected accumulation, sparsify,
/// momentum factor masking, quantize. `epoch` indexes the warm-up schedule.
CompressedGradient encode(std::span<const double> g, const CodecSpec& spec, EncoderState& state,
                          std::size_t epoch = 0);

ParamVector decode(const CompressedGradient& c);

/// Size-weighted mean of decoded payloads. Throws ProtocolError when codecs
/// or lengths disagree, or when the list is empty.
ParamVector decode_and_accumulate(std::span<const CompressedGradient> payloads,
                                  std::span<const double> sizes);

/// payload_bits / (64 d).
double compression_ratio(const CompressedGradient& c);

/// Canonical little-endian byte layout:
///   u8 sparsifier, u8 quantizer, u8 flags (bit0 = dense), u8 reserved,
///   u32 length, u32 count,
///   u32 indices[count]        (omitted when dense),
///   f64 scales[n]             (n = 0, 1, 1, 2 for none/binary/three/four),
///   f64 values[count]         (no quantizer) or
///   packed symbols            (ceil(log2 levels) bits each, LSB first,
///                              zero-padded to a byte).
/// Symbol codes: binary {+1, -1} -> {0, 1}; three-level {0, +1, -1} -> {0, 1, 2};
/// four-level {-2, -1, +1, +2} -> {0, 1, 2, 3}.
std::vector<std::uint8_t> serialize(const CompressedGradient& c);
CompressedGradient deserialize(std::span<const std::uint8_t> bytes);

}  // namespace airfed

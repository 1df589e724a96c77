#include <bit>
#include <cstring>

#include "airfed/compression.hpp"
#include "airfed/error.hpp"

namespace airfed {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ProtocolError("truncated compressed payload");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t encode_symbol(std::int8_t s, Quantizer q) {
  switch (q) {
    case Quantizer::binary: return s < 0 ? 1 : 0;
    case Quantizer::three_level: return s == 0 ? 0 : (s > 0 ? 1 : 2);
    case Quantizer::four_level: return s == -2 ? 0 : s == -1 ? 1 : s == 1 ? 2 : 3;
    case Quantizer::none: break;
  }
  throw InternalError("symbol without quantizer");
}

std::int8_t decode_symbol(std::uint8_t code, Quantizer q) {
  switch (q) {
    case Quantizer::binary: return code ? -1 : 1;
    case Quantizer::three_level:
      if (code > 2) throw ProtocolError("invalid three-level symbol code");
      return code == 0 ? 0 : (code == 1 ? 1 : -1);
    case Quantizer::four_level: {
      constexpr std::int8_t table[4] = {-2, -1, 1, 2};
      return table[code & 3];
    }
    case Quantizer::none: break;
  }
  throw InternalError("symbol without quantizer");
}

std::size_t expected_scales(Quantizer q) {
  return q == Quantizer::none ? 0 : q == Quantizer::four_level ? 2 : 1;
}

}  // namespace

std::vector<std::uint8_t> serialize(const CompressedGradient& c) {
  const Quantizer q = c.codec.quantizer;
  if (c.scales.size() != expected_scales(q)) throw InternalError("scale count does not match quantizer");

  Writer w;
  w.u8(static_cast<std::uint8_t>(c.codec.sparsifier));
  w.u8(static_cast<std::uint8_t>(q));
  w.u8(c.dense ? 1 : 0);
  w.u8(0);
  w.u32(c.length);
  w.u32(static_cast<std::uint32_t>(c.count()));
  if (!c.dense)
    for (auto i : c.indices) w.u32(i);
  for (double s : c.scales) w.f64(s);
  if (q == Quantizer::none) {
    for (double v : c.values) w.f64(v);
    return w.take();
  }
  const auto width = static_cast<unsigned>(symbol_bits(q));
  std::uint8_t acc = 0;
  unsigned used = 0;
  for (auto s : c.symbols) {
    acc |= static_cast<std::uint8_t>(encode_symbol(s, q) << used);
    used += width;
    if (used == 8) {
      w.u8(acc);
      acc = 0;
      used = 0;
    }
  }
  if (used) w.u8(acc);
  return w.take();
}

CompressedGradient deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  CompressedGradient c;
  const auto sp = r.u8();
  const auto qz = r.u8();
  if (sp > 2) throw ProtocolError("unknown sparsifier id");
  if (qz != 0 && (qz < 2 || qz > 4)) throw ProtocolError("unknown quantizer id");
  c.codec = {static_cast<Sparsifier>(sp), static_cast<Quantizer>(qz)};
  c.dense = (r.u8() & 1) != 0;
  r.u8();
  c.length = r.u32();
  const std::uint32_t count = r.u32();
  if (count > c.length) throw ProtocolError("payload count exceeds length");
  if (c.dense && count != c.length) throw ProtocolError("dense payload must cover every index");

  c.indices.resize(count);
  for (std::uint32_t j = 0; j < count; ++j) {
    c.indices[j] = c.dense ? j : r.u32();
    if (c.indices[j] >= c.length || (j > 0 && c.indices[j] <= c.indices[j - 1]))
      throw ProtocolError("payload indices must be strictly increasing and in range");
  }
  const Quantizer q = c.codec.quantizer;
  c.scales.resize(expected_scales(q));
  for (auto& s : c.scales) s = r.f64();
  if (q == Quantizer::none) {
    c.values.resize(count);
    for (auto& v : c.values) v = r.f64();
  } else {
    const auto width = static_cast<unsigned>(symbol_bits(q));
    const std::uint8_t mask = static_cast<std::uint8_t>((1u << width) - 1);
    c.symbols.resize(count);
    std::uint8_t acc = 0;
    unsigned avail = 0;
    for (auto& s : c.symbols) {
      if (avail == 0) {
        acc = r.u8();
        avail = 8;
      }
      s = decode_symbol(acc & mask, q);
      acc = static_cast<std::uint8_t>(acc >> width);
      avail -= width;
    }
  }
  if (!r.done()) throw ProtocolError("trailing bytes after compressed payload");

  const std::uint64_t per_symbol = symbol_bits(q);
  c.payload_bits = c.dense ? static_cast<std::uint64_t>(c.length) * per_symbol + kHeaderBits
                           : static_cast<std::uint64_t>(count) * (index_bits(c.length) + per_symbol) + kHeaderBits;
  return c;
}

}  // namespace airfed

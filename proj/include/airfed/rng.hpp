#pragma once

#include <cstdint>
#include <random>

namespace airfed {

using Rng = std::mt19937_64;

/// Independent random streams derived from the master seed. Each consumer of
/// randomness draws from its own stream so that, for example, adding channel
/// noise never shifts the participant selection of a paired run.
enum class Stream : std::uint64_t {
  data = 1,
  client = 2,
  selection = 3,
  delay = 4,
  channel = 5,
  noise = 6,
  sensing = 7,
  init = 8,
  trial = 9,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

/// Execution policy for the data-parallel kernels. Both policies produce
/// bit-identical results.
enum class Exec { serial, parallel };

}  // namespace airfed

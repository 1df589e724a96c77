#include <cmath>
#include <string>

#include "airfed/error.hpp"
#include "airfed/model.hpp"

namespace airfed {

std::vector<Dataset> make_synthetic(const PartitionSpec& partition, std::uint64_t seed) {
  if (partition.sizes.empty()) throw ConfigError("partition needs at least one client");
  if (partition.dim == 0) throw ConfigError("partition feature dimension must be positive");
  for (std::size_t k = 0; k < partition.sizes.size(); ++k)
    if (partition.sizes[k] == 0) throw ConfigError("client " + std::to_string(k) + " has no samples");
  if (!partition.truth.empty() && partition.truth.size() != partition.dim)
    throw ConfigError("ground-truth weights do not match feature dimension");

  const std::size_t p = partition.dim;
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> truth = partition.truth;
  if (truth.empty()) {
    Rng rng = make_rng(seed, Stream::data, 0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    truth.resize(p);
    for (auto& t : truth) t = scale * normal(rng);
  }

  std::vector<Dataset> out;
  out.reserve(partition.sizes.size());
  for (std::size_t k = 0; k < partition.sizes.size(); ++k) {
    Rng rng = make_rng(seed, Stream::data, k + 1);
    std::vector<double> shift(p);
    for (auto& s : shift) s = partition.skew * normal(rng);

    Dataset d;
    d.dim = p;
    const std::size_t n = partition.sizes[k];
    d.features.resize(n * p);
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double x = shift[j] + normal(rng);
        d.features[i * p + j] = x;
        z += truth[j] * x;
      }
      z += partition.label_noise * normal(rng);
      d.labels[i] = partition.labels == LabelRule::binary ? (z > 0.0 ? 1.0 : 0.0) : z;
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace airfed

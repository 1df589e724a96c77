#pragma once

#include <vector>

#include "airfed/fl_core.hpp"
#include "airfed/model.hpp"

namespace fixture {

struct Setup {
  airfed::Federation fed;
  std::vector<airfed::Dataset> data;
};

/// Full-batch, one local step, ideal transport, uncompressed gradient payloads.
inline Setup logistic(std::size_t clients, std::size_t features, std::size_t per_client, double mu,
                      std::uint64_t seed = 3, double skew = 0.0, double l2 = 0.01) {
  Setup s;
  s.fed.model.kind = airfed::ModelKind::logistic;
  s.fed.model.input_dim = features;
  s.fed.model.l2 = l2;
  s.fed.train.step_size = mu;
  s.fed.seed = seed;
  s.fed.exec = airfed::Exec::serial;
  airfed::PartitionSpec part;
  part.sizes.assign(clients, per_client);
  for (std::size_t k = 0; k < clients; ++k) part.sizes[k] += 7 * k;
  part.dim = features;
  part.label_noise = 0.1;
  part.skew = skew;
  s.data = airfed::make_synthetic(part, seed);
  return s;
}

}  // namespace fixture

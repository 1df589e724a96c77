#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "airfed/rng.hpp"

namespace airfed {

/// Flat parameter or gradient vector of model dimension d.
using ParamVector = std::vector<double>;

/// Row-major n x p feature matrix with aligned labels.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  void validate() const;

  static Dataset concat(std::span<const Dataset> parts);
};

enum class ModelKind { linear, logistic, mlp };

/// Model family and shape.
///
/// Losses (all means over the batch, plus (l2/2)*||w||^2):
///  - linear:   0.5 * (w.x - y)^2
///  - logistic: log(1 + exp(z)) - y*z with z = w.x, y in {0, 1}
///  - mlp:      logistic loss on z = v.tanh(W x + b) + c
///
/// Linear and logistic models have no bias term, so d = p. The MLP packs
/// [W (hidden x p, row-major), b (hidden), v (hidden), c] for
/// d = hidden*p + 2*hidden + 1.
struct ModelSpec {
  ModelKind kind = ModelKind::logistic;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  double l2 = 0.0;

  std::size_t dimension() const;
  void validate() const;
};

/// Local optimizer settings. batch_size == 0 means full batch.
struct TrainConfig {
  double step_size = 0.1;
  std::size_t batch_size = 0;
  std::size_t local_steps = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Without-replacement mini-batch order, reshuffled at every epoch boundary.
struct BatchSampler {
  Rng rng;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  explicit BatchSampler(std::uint64_t seed = 0) : rng(seed) {}
  std::vector<std::size_t> next(std::size_t n, std::size_t batch);
};

double local_loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data);
double local_loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                  std::span<const std::size_t> rows);

/// Size-weighted mean of per-dataset losses.
double global_loss(const ModelSpec& spec, std::span<const double> w,
                   std::span<const Dataset> datasets);

ParamVector gradient(const ModelSpec& spec, std::span<const double> w, const Dataset& data);
ParamVector gradient(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                     std::span<const std::size_t> rows);

/// E mini-batch SGD steps w <- w - mu * grad starting at w_start.
ParamVector sgd_local_update(const ModelSpec& spec, std::span<const double> w_start,
                             const Dataset& data, BatchSampler& sampler,
                             const TrainConfig& cfg);

/// Zeros for convex kinds; small seeded Gaussian weights for the MLP, whose
/// hidden units would otherwise stay symmetric.
ParamVector initial_params(const ModelSpec& spec, std::uint64_t seed);

/// Upper bound on the gradient Lipschitz constant of the pooled loss for the
/// convex kinds: lambda_max(X^T X / n) (times 1/4 for logistic) + l2.
/// Full-batch descent decreases the loss monotonically for step sizes below
/// 2 / L.
double smoothness_bound(const ModelSpec& spec, std::span<const Dataset> datasets);

enum class LabelRule { binary, real };

/// Synthetic federated partition. Features of client k are N(skew * s_k, I)
/// with s_k ~ N(0, I); labels come from a planted w* (drawn N(0, 1/p) when
/// `truth` is empty) with additive Gaussian label noise before thresholding.
struct PartitionSpec {
  std::vector<std::size_t> sizes;
  std::size_t dim = 0;
  LabelRule labels = LabelRule::binary;
  std::vector<double> truth;
  double label_noise = 0.0;
  double skew = 0.0;
};

std::vector<Dataset> make_synthetic(const PartitionSpec& partition, std::uint64_t seed);

}  // namespace airfed

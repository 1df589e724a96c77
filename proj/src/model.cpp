#include "airfed/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "airfed/error.hpp"

namespace airfed {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_shapes(const ModelSpec& spec, std::span<const double> w, const Dataset& data) {
  if (w.size() != spec.dimension())
    throw ConfigError("parameter length " + std::to_string(w.size()) +
                      " does not match model dimension " + std::to_string(spec.dimension()));
  if (data.dim != spec.input_dim)
    throw ConfigError("dataset feature dimension " + std::to_string(data.dim) +
                      " does not match model input dimension " + std::to_string(spec.input_dim));
}

struct MlpView {
  std::span<const double> W, b, v;
  double c;

  MlpView(const ModelSpec& spec, std::span<const double> w)
      : W(w.subspan(0, spec.hidden * spec.input_dim)),
        b(w.subspan(spec.hidden * spec.input_dim, spec.hidden)),
        v(w.subspan(spec.hidden * (spec.input_dim + 1), spec.hidden)),
        c(w[spec.hidden * (spec.input_dim + 2)]) {}

  double forward(std::span<const double> x, std::vector<double>& h) const {
    const std::size_t p = x.size();
    double z = c;
    for (std::size_t j = 0; j < h.size(); ++j) {
      h[j] = std::tanh(dot(W.subspan(j * p, p), x) + b[j]);
      z += v[j] * h[j];
    }
    return z;
  }
};

template <typename F>
void for_rows(const Dataset& data, std::span<const std::size_t> rows, F&& f) {
  if (rows.empty()) {
    for (std::size_t i = 0; i < data.size(); ++i) f(i);
  } else {
    for (std::size_t i : rows) f(i);
  }
}

std::size_t batch_count(const Dataset& data, std::span<const std::size_t> rows) {
  return rows.empty() ? data.size() : rows.size();
}

}  // namespace

void Dataset::validate() const {
  if (size() == 0) throw ConfigError("dataset is empty");
  if (features.size() != size() * dim) throw ConfigError("dataset features and labels are misaligned");
}

Dataset Dataset::concat(std::span<const Dataset> parts) {
  Dataset out;
  if (parts.empty()) return out;
  out.dim = parts.front().dim;
  for (const auto& p : parts) {
    if (p.dim != out.dim) throw ConfigError("cannot concatenate datasets of different dimension");
    out.features.insert(out.features.end(), p.features.begin(), p.features.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

std::size_t ModelSpec::dimension() const {
  if (kind == ModelKind::mlp) return hidden * input_dim + 2 * hidden + 1;
  return input_dim;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("model input dimension must be positive");
  if (kind == ModelKind::mlp && hidden == 0) throw ConfigError("mlp hidden width must be positive");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("l2 must be finite and non-negative");
}

void TrainConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("step size must be finite and positive");
  if (local_steps == 0) throw ConfigError("local steps must be at least 1");
}

std::vector<std::size_t> BatchSampler::next(std::size_t n, std::size_t batch) {
  if (batch == 0 || batch >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  std::vector<std::size_t> out;
  out.reserve(batch);
  while (out.size() < batch) {
    if (order.size() != n || cursor >= n) {
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    out.push_back(order[cursor++]);
  }
  return out;
}

double local_loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data) {
  return local_loss(spec, w, data, {});
}

double local_loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                  std::span<const std::size_t> rows) {
  check_shapes(spec, w, data);
  const std::size_t n = batch_count(data, rows);
  if (n == 0) throw ConfigError("loss of an empty batch");

  double sum = 0.0;
  switch (spec.kind) {
    case ModelKind::linear:
      for_rows(data, rows, [&](std::size_t i) {
        const double r = dot(w, data.row(i)) - data.labels[i];
        sum += 0.5 * r * r;
      });
      break;
    case ModelKind::logistic:
      for_rows(data, rows, [&](std::size_t i) {
        const double z = dot(w, data.row(i));
        sum += softplus(z) - data.labels[i] * z;
      });
      break;
    case ModelKind::mlp: {
      const MlpView net(spec, w);
      std::vector<double> h(spec.hidden);
      for_rows(data, rows, [&](std::size_t i) {
        const double z = net.forward(data.row(i), h);
        sum += softplus(z) - data.labels[i] * z;
      });
      break;
    }
  }
  return sum / static_cast<double>(n) + 0.5 * spec.l2 * dot(w, w);
}

double global_loss(const ModelSpec& spec, std::span<const double> w,
                   std::span<const Dataset> datasets) {
  if (datasets.empty()) throw ConfigError("global loss needs at least one dataset");
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& d : datasets) {
    const auto n = static_cast<double>(d.size());
    weighted += n * local_loss(spec, w, d);
    total += n;
  }
  return weighted / total;
}

ParamVector gradient(const ModelSpec& spec, std::span<const double> w, const Dataset& data) {
  return gradient(spec, w, data, {});
}

ParamVector gradient(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                     std::span<const std::size_t> rows) {
  check_shapes(spec, w, data);
  const std::size_t n = batch_count(data, rows);
  if (n == 0) throw ConfigError("gradient of an empty batch");

  const std::size_t p = spec.input_dim;
  ParamVector g(w.size(), 0.0);
  switch (spec.kind) {
    case ModelKind::linear:
    case ModelKind::logistic:
      for_rows(data, rows, [&](std::size_t i) {
        const auto x = data.row(i);
        const double z = dot(w, x);
        const double r = spec.kind == ModelKind::linear ? z - data.labels[i] : sigmoid(z) - data.labels[i];
        for (std::size_t j = 0; j < p; ++j) g[j] += r * x[j];
      });
      break;
    case ModelKind::mlp: {
      const MlpView net(spec, w);
      const std::size_t H = spec.hidden;
      const std::size_t off_b = H * p, off_v = H * (p + 1), off_c = H * (p + 2);
      std::vector<double> h(H);
      for_rows(data, rows, [&](std::size_t i) {
        const auto x = data.row(i);
        const double delta = sigmoid(net.forward(x, h)) - data.labels[i];
        g[off_c] += delta;
        for (std::size_t j = 0; j < H; ++j) {
          g[off_v + j] += delta * h[j];
          const double db = delta * net.v[j] * (1.0 - h[j] * h[j]);
          g[off_b + j] += db;
          for (std::size_t q = 0; q < p; ++q) g[j * p + q] += db * x[q];
        }
      });
      break;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] * inv_n + spec.l2 * w[j];
  return g;
}

ParamVector sgd_local_update(const ModelSpec& spec, std::span<const double> w_start,
                             const Dataset& data, BatchSampler& sampler,
                             const TrainConfig& cfg) {
  data.validate();
  ParamVector w(w_start.begin(), w_start.end());
  const bool full = cfg.batch_size == 0 || cfg.batch_size >= data.size();
  for (std::size_t step = 0; step < cfg.local_steps; ++step) {
    const ParamVector g = full ? gradient(spec, w, data)
                               : gradient(spec, w, data, sampler.next(data.size(), cfg.batch_size));
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.step_size * g[j];
  }
  return w;
}

ParamVector initial_params(const ModelSpec& spec, std::uint64_t seed) {
  ParamVector w(spec.dimension(), 0.0);
  if (spec.kind != ModelKind::mlp) return w;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(spec.input_dim)));
  for (auto& x : w) x = normal(rng);
  return w;
}

double smoothness_bound(const ModelSpec& spec, std::span<const Dataset> datasets) {
  if (spec.kind == ModelKind::mlp) throw ConfigError("smoothness bound is only defined for convex models");
  const Dataset pooled = Dataset::concat(datasets);
  pooled.validate();
  const auto n = static_cast<Eigen::Index>(pooled.size());
  const auto p = static_cast<Eigen::Index>(pooled.dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
      pooled.features.data(), n, p);
  const Eigen::MatrixXd gram = X.transpose() * X / static_cast<double>(n);
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  return (spec.kind == ModelKind::logistic ? 0.25 * top : top) + spec.l2;
}

}  // namespace airfed

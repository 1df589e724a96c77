#pragma once

#include "airfed/kernels.hpp"

namespace airfed::kernels::detail {

inline void update_one(const ModelSpec& spec, const TrainConfig& cfg, ClientState& c) {
  c.local = sgd_local_update(spec, c.local, c.data, c.sampler, cfg);
}

inline double combine_one(const Eigen::MatrixXd& gains, std::span<const double> amplitudes,
                          std::span<const ParamVector> streams, const Eigen::MatrixXd& noise,
                          const Eigen::VectorXd& m, std::size_t i) {
  const Eigen::Index n = gains.cols();
  double y = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    double x = noise.size() ? noise(static_cast<Eigen::Index>(i), a) : 0.0;
    for (std::size_t j = 0; j < streams.size(); ++j)
      x += gains(static_cast<Eigen::Index>(j), a) * (amplitudes[j] * streams[j][i]);
    y += m(a) * x;
  }
  return y;
}

inline std::size_t stream_length(std::span<const ParamVector> streams) {
  return streams.empty() ? 0 : streams.front().size();
}

}  // namespace airfed::kernels::detail

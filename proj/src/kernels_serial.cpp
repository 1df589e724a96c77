#include "kernels_common.hpp"

namespace airfed::kernels {

namespace serial {

void local_updates(const ModelSpec& spec, const TrainConfig& cfg, std::span<ClientState> clients,
                   std::span<const std::size_t> ids) {
  for (std::size_t id : ids) detail::update_one(spec, cfg, clients[id]);
}

std::vector<double> superpose_and_combine(const Eigen::MatrixXd& gains, std::span<const double> amplitudes,
                                          std::span<const ParamVector> streams, const Eigen::MatrixXd& noise,
                                          const Eigen::VectorXd& m) {
  std::vector<double> y(detail::stream_length(streams));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = detail::combine_one(gains, amplitudes, streams, noise, m, i);
  return y;
}

}  // namespace serial

void local_updates(Exec exec, const ModelSpec& spec, const TrainConfig& cfg, std::span<ClientState> clients,
                   std::span<const std::size_t> ids) {
  if (exec == Exec::parallel) return parallel::local_updates(spec, cfg, clients, ids);
  serial::local_updates(spec, cfg, clients, ids);
}

std::vector<double> superpose_and_combine(Exec exec, const Eigen::MatrixXd& gains,
                                          std::span<const double> amplitudes,
                                          std::span<const ParamVector> streams,
                                          const Eigen::MatrixXd& noise, const Eigen::VectorXd& m) {
  if (exec == Exec::parallel) return parallel::superpose_and_combine(gains, amplitudes, streams, noise, m);
  return serial::superpose_and_combine(gains, amplitudes, streams, noise, m);
}

}  // namespace airfed::kernels

#pragma once

// Data-parallel kernels. Each has a serial reference and an OpenMP version;
// both walk the same per-item code so results are bit-identical.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "airfed/client.hpp"
#include "airfed/model.hpp"
#include "airfed/rng.hpp"

namespace airfed::kernels {

/// client.local <- sgd_local_update(client.local) for every listed client.
void local_updates(Exec exec, const ModelSpec& spec, const TrainConfig& cfg,
                   std::span<ClientState> clients, std::span<const std::size_t> ids);

/// y_i = m^T (sum_j gains.row(j) * amplitudes[j] * streams[j][i] + noise.row(i))
/// for i over the stream length. An empty noise matrix means noiseless.
std::vector<double> superpose_and_combine(Exec exec, const Eigen::MatrixXd& gains,
                                          std::span<const double> amplitudes,
                                          std::span<const ParamVector> streams,
                                          const Eigen::MatrixXd& noise, const Eigen::VectorXd& m);

namespace serial {
void local_updates(const ModelSpec& spec, const TrainConfig& cfg, std::span<ClientState> clients,
                   std::span<const std::size_t> ids);
std::vector<double> superpose_and_combine(const Eigen::MatrixXd& gains, std::span<const double> amplitudes,
                                          std::span<const ParamVector> streams, const Eigen::MatrixXd& noise,
                                          const Eigen::VectorXd& m);
}  // namespace serial

namespace parallel {
void local_updates(const ModelSpec& spec, const TrainConfig& cfg, std::span<ClientState> clients,
                   std::span<const std::size_t> ids);
std::vector<double> superpose_and_combine(const Eigen::MatrixXd& gains, std::span<const double> amplitudes,
                                          std::span<const ParamVector> streams, const Eigen::MatrixXd& noise,
                                          const Eigen::VectorXd& m);
}  // namespace parallel

}  // namespace airfed::kernels

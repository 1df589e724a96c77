#include <exception>

#include "kernels_common.hpp"

namespace airfed::kernels::parallel {

void local_updates(const ModelSpec& spec, const TrainConfig& cfg, std::span<ClientState> clients,
                   std::span<const std::size_t> ids) {
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    try {
      detail::update_one(spec, cfg, clients[ids[static_cast<std::size_t>(j)]]);
    } catch (...) {
#pragma omp critical(airfed_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> superpose_and_combine(const Eigen::MatrixXd& gains, std::span<const double> amplitudes,
                                          std::span<const ParamVector> streams, const Eigen::MatrixXd& noise,
                                          const Eigen::VectorXd& m) {
  std::vector<double> y(detail::stream_length(streams));
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] =
        detail::combine_one(gains, amplitudes, streams, noise, m, static_cast<std::size_t>(i));
  return y;
}

}  // namespace airfed::kernels::parallel

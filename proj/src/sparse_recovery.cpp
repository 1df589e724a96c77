#include <cmath>
#include <vector>

#include "airfed/channel.hpp"
#include "airfed/error.hpp"

namespace airfed {

ParamVector omp_recover(const Eigen::MatrixXd& A, std::span<const double> y, std::size_t max_support,
                        double rel_tol) {
  if (static_cast<std::size_t>(A.rows()) != y.size())
    throw ConfigError("measurement length does not match sensing matrix rows");
  const Eigen::Index d = A.cols();
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd col_norms = A.colwise().norm().transpose();
  const double stop = rel_tol * target.norm();
  max_support = std::min<std::size_t>(max_support, static_cast<std::size_t>(std::min(A.rows(), d)));

  std::vector<Eigen::Index> support;
  std::vector<char> used(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd coeffs;
  Eigen::VectorXd residual = target;

  while (support.size() < max_support && residual.norm() > stop) {
    const Eigen::VectorXd corr = A.transpose() * residual;
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (used[static_cast<std::size_t>(j)] || col_norms(j) == 0.0) continue;
      const double score = std::abs(corr(j)) / col_norms(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) break;
    support.push_back(best);
    used[static_cast<std::size_t>(best)] = 1;

    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) sub.col(static_cast<Eigen::Index>(s)) = A.col(support[s]);
    coeffs = sub.colPivHouseholderQr().solve(target);
    residual = target - sub * coeffs;
  }

  ParamVector out(static_cast<std::size_t>(d), 0.0);
  for (std::size_t s = 0; s < support.size(); ++s) out[static_cast<std::size_t>(support[s])] = coeffs(static_cast<Eigen::Index>(s));
  return out;
}

}  // namespace airfed

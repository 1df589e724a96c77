// Serial reference versus OpenMP kernels. Prints wall time per call and
// confirms the outputs are bit-identical.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <omp.h>

#include "airfed/fl_core.hpp"
#include "airfed/kernels.hpp"

using namespace airfed;

namespace {

template <typename F>
double seconds_per_call(int reps, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name, 1e3 * serial, 1e3 * parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    Federation fed;
    fed.model = {ModelKind::mlp, 32, 32, 1e-3};
    fed.train = {0.05, 16, 5, 1};
    PartitionSpec part;
    part.sizes.assign(32, 400);
    part.dim = 32;
    const auto data = make_synthetic(part, 1);
    auto a = make_clients(data, fed);
    auto b = make_clients(data, fed);
    std::vector<std::size_t> ids(32);
    for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = k;
    const double ts = seconds_per_call(5, [&] { kernels::serial::local_updates(fed.model, fed.train, a, ids); });
    const double tp = seconds_per_call(5, [&] { kernels::parallel::local_updates(fed.model, fed.train, b, ids); });
    bool same = true;
    for (std::size_t k = 0; k < a.size(); ++k) same = same && a[k].local == b[k].local;
    report("local_updates", ts, tp, same);
  }

  {
    const Eigen::Index J = 20, N = 8;
    const std::size_t L = 200000;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    const Eigen::MatrixXd gains = Eigen::MatrixXd::Random(J, N);
    std::vector<double> amps(static_cast<std::size_t>(J), 0.5);
    std::vector<ParamVector> streams(static_cast<std::size_t>(J), ParamVector(L));
    for (auto& s : streams)
      for (auto& v : s) v = normal(rng);
    const Eigen::MatrixXd noise = 0.01 * Eigen::MatrixXd::Random(static_cast<Eigen::Index>(L), N);
    const Eigen::VectorXd m = Eigen::VectorXd::Random(N);
    std::vector<double> ys, yp;
    const double ts = seconds_per_call(5, [&] { ys = kernels::serial::superpose_and_combine(gains, amps, streams, noise, m); });
    const double tp = seconds_per_call(5, [&] { yp = kernels::parallel::superpose_and_combine(gains, amps, streams, noise, m); });
    report("superpose_and_combine", ts, tp, ys == yp);
  }
}

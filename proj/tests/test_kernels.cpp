#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "airfed/kernels.hpp"
#include "airfed/scenario.hpp"

using namespace airfed;

TEST_CASE("local updates: parallel matches serial bit for bit") {
  for (auto kind : {ModelKind::linear, ModelKind::logistic, ModelKind::mlp}) {
    auto s = fixture::logistic(9, 7, 40, 0.1);
    s.fed.model.kind = kind;
    s.fed.model.hidden = 5;
    s.fed.train.batch_size = 8;
    s.fed.train.local_steps = 3;
    auto a = make_clients(s.data, s.fed);
    auto b = make_clients(s.data, s.fed);
    const std::vector<std::size_t> ids{0, 2, 3, 5, 8};
    for (int round = 0; round < 4; ++round) {
      kernels::serial::local_updates(s.fed.model, s.fed.train, a, ids);
      kernels::parallel::local_updates(s.fed.model, s.fed.train, b, ids);
    }
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].local == b[k].local);
    CHECK(a[1].local == make_clients(s.data, s.fed)[1].local);
  }
}

TEST_CASE("superpose and combine: parallel matches serial bit for bit") {
  std::mt19937_64 rng(3);
  const std::size_t J = 5, N = 3, L = 2000;
  Eigen::MatrixXd gains = Eigen::MatrixXd::Random(J, N);
  std::vector<double> amps{0.3, 1.2, 0.7, 0.01, 2.0};
  std::vector<ParamVector> streams;
  for (std::size_t j = 0; j < J; ++j) streams.push_back(oracle::random_vector(rng, L));
  const Eigen::MatrixXd noise = 0.1 * Eigen::MatrixXd::Random(L, N);
  const Eigen::VectorXd m = Eigen::VectorXd::Random(N);
  CHECK(kernels::serial::superpose_and_combine(gains, amps, streams, noise, m) ==
        kernels::parallel::superpose_and_combine(gains, amps, streams, noise, m));
  const auto clean = kernels::serial::superpose_and_combine(gains, amps, streams, Eigen::MatrixXd(), m);
  CHECK(clean == kernels::parallel::superpose_and_combine(gains, amps, streams, Eigen::MatrixXd(), m));

  // independent evaluation of the defining sum
  double worst = 0.0;
  for (std::size_t i = 0; i < L; i += 97) {
    double y = 0.0;
    for (std::size_t j = 0; j < J; ++j)
      y += m.dot(gains.row(static_cast<Eigen::Index>(j)).transpose()) * amps[j] * streams[j][i];
    worst = std::max(worst, std::abs(y - clean[i]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("whole runs are identical under both execution modes") {
  auto sc = parse_scenario(
      "seed = 21\nrounds = 8\nmodel = mlp\nfeatures = 5\nhidden = 4\nclients = 6\nsamples_per_client = 25\n"
      "batch = 5\nlocal_steps = 2\nscheme = over-the-air\nnoise_std = 0.02\nantennas = 6\n"
      "sparsifier = topk\ntopk_fraction = 0.2\nquantizer = binary\nerror_feedback = on\n");
  auto fa = sc.setup();
  auto fb = fa;
  fa.fed.exec = Exec::serial;
  fb.fed.exec = Exec::parallel;
  const auto a = run_training(fa);
  const auto b = run_training(fb);
  CHECK(a.final_params == b.final_params);
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    CHECK(a.records[t].global_loss == b.records[t].global_loss);
    CHECK(a.records[t].aggregation_error == b.records[t].aggregation_error);
  }
}

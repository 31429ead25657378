#include "fga/dataset.hpp"
#include "fga/training.hpp"
#include "oracles/oracles.hpp"

#include <doctest.h>

using namespace fga;

namespace {

Dataset linear_data(Index d, Index m, std::uint64_t seed, const Vector<double>& w, double b) {
  Dataset ds = gen_synthetic(d, m, 1, seed);
  ds.targets = (ds.features * w).array() + b;
  return ds;
}

}  // namespace

TEST_CASE("sse matches the long double oracle") {
  const Vector<double> a = Vector<double>::LinSpaced(50, -3, 7);
  const Vector<double> b = a.array().square();
  CHECK(sse(a, b) == doctest::Approx(oracle::sse(a, b)).epsilon(1e-14));
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(oracle::sse(a, b) / 50)));
  CHECK_THROWS_AS(sse(Vector<double>(), Vector<double>()), DataError);
}

TEST_CASE("scaled target has the node mean") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vector<double> y(20);
    for (Index i = 0; i < 20; ++i) y(i) = uniform01(rng) * 10 + 1;
    const double mu = 5 * uniform01(rng) - 2;
    const Vector<double> ys = scaled_target<double>(y, mu, y.mean());
    CHECK(ys.mean() == doctest::Approx(mu).epsilon(1e-12));
  }
  Vector<double> zero_mean(2);
  zero_mean << -1, 1;
  CHECK(scaled_target<double>(zero_mean, 3.0, 0.0) == zero_mean);
}

TEST_CASE("loss-optimised training starts at the SVM and never gets worse") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Dataset ds = gen_synthetic(9, 60, 2, seed);
    ds = apply_standardizer(fit_standardizer(ds), ds);
    const auto svm = svm_baseline(ds, {0.5, 4.0}, 3, seed);
    TrainConfig cfg;
    const auto res = train_loss_optimized(ds, svm.model, 3, random_permutation(9, seed), cfg);
    const double svm_sse = sse(predict_rows(svm.model, ds.features), ds.targets);
    CHECK(res.report.initial_error == doctest::Approx(svm_sse).epsilon(1e-12));
    CHECK(res.report.final_error <= res.report.initial_error);
    double prev = res.report.initial_error;
    for (double e : res.report.sweep_errors) {
      CHECK(e <= prev);
      prev = e;
    }
    const double reevaluated = sse(evaluate_rows(res.graph, ds.features), ds.targets);
    CHECK(reevaluated == doctest::Approx(res.report.final_error).epsilon(1e-10));
    for (const auto& u : res.report.updates)
      if (u.accepted) CHECK(res.graph.node(u.layer, u.position).retrained);
  }
}

TEST_CASE("loss-optimised training accepts refits from a poor start") {
  Vector<double> w(4);
  w << 3, -2, 1, 4;
  const Dataset ds = linear_data(4, 80, 5, w, 2.0);
  LinearModel<double> weak{0.01 * w, ds.targets.mean()};
  TrainConfig cfg;
  cfg.svr.C = 16;
  const auto res = train_loss_optimized(ds, weak, 2, identity_permutation(4), cfg);
  CHECK(res.report.retrained_count > 0);
  CHECK(res.report.final_error < 0.5 * res.report.initial_error);
  CHECK(res.report.sweeps_run <= cfg.max_sweeps);
}

TEST_CASE("layer-based training fits exactly linear data") {
  Vector<double> w(4);
  w << 1, 2, -1, 0.5;
  const Dataset ds = linear_data(4, 100, 8, w, 1.0);
  TrainConfig cfg;
  cfg.svr.C = 32;
  cfg.svr.epsilon = 0.01;
  const auto res = train_layer_based(ds, 2, cfg);
  const double total = (ds.targets.array() - ds.targets.mean()).square().sum();
  CHECK(res.report.final_error < 0.05 * total);
  CHECK(res.report.retrained_count == res.graph.node_count());
  CHECK(res.report.final_error == doctest::Approx(sse(evaluate_rows(res.graph, ds.features), ds.targets)));
}

TEST_CASE("one-layer graph is a single node") {
  const Dataset ds = gen_synthetic(3, 30, 2, 2);
  const auto svm = svm_baseline(ds, {1.0}, 3, 1);
  const auto res = train_loss_optimized(ds, svm.model, 4, identity_permutation(3), TrainConfig{});
  CHECK(res.graph.node_count() == 1);
  CHECK(res.report.final_error <= res.report.initial_error);
}

TEST_CASE("least squares recovers an exact law") {
  Vector<double> w(3);
  w << 1.5, -0.5, 2;
  const Dataset ds = linear_data(3, 40, 4, w, -1.0);
  const auto lr = linreg_baseline(ds);
  CHECK((lr.weights - w).norm() < 1e-6);
  CHECK(lr.bias == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.max_sweeps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon_stop = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

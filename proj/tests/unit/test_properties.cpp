// Randomised invariants across modules.
#include "fga/analysis.hpp"
#include "fga/dataset.hpp"
#include "fga/permutation.hpp"
#include "fga/qp_oracle.hpp"
#include "oracles/oracles.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace fga;

namespace {

Matrix<double> uniform_rows(Index n, Index d, Rng& rng, double lo = -1, double hi = 1) {
  Matrix<double> X(n, d);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = lo + (hi - lo) * uniform01(rng);
  return X;
}

struct ThreadsGuard {
  explicit ThreadsGuard(const char* v) { setenv("FGA_THREADS", v, 1); }
  ~ThreadsGuard() { unsetenv("FGA_THREADS"); }
};

}  // namespace

TEST_CASE("svr dual objective matches the oracle on small problems") {
  Rng rng(101);
  for (int t = 0; t < 25; ++t) {
    const Index m = 2 + static_cast<Index>(uniform_below(rng, 9));
    const Index d = 1 + static_cast<Index>(uniform_below(rng, 4));
    const Matrix<double> X = uniform_rows(m, d, rng);
    const Vector<double> y = uniform_rows(m, 1, rng, -2, 2).col(0);
    SvrConfig cfg;
    cfg.C = std::ldexp(1.0, static_cast<int>(uniform_below(rng, 6)) - 2);
    cfg.epsilon = 0.1 * uniform01(rng);
    cfg.tol = 1e-8;
    const auto ours = svr_train<double>(X, y, cfg);
    const auto ref = qp_oracle_train<double>(X, y, cfg);
    INFO("trial " << t);
    CHECK(std::abs(ours.dual_objective - ref.dual_objective) <= 1e-6);
    CHECK(ours.duality_gap >= -cfg.tol);
    CHECK(ours.dual_objective <= ours.primal_objective + 1e-9);
  }
}

TEST_CASE("a tube covering the targets gives w = 0") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const Matrix<double> X = uniform_rows(15, 3, rng);
    const Vector<double> y = uniform_rows(15, 1, rng, 0, 1).col(0);
    SvrConfig cfg;
    cfg.epsilon = 1.0;
    cfg.C = 10;
    const auto res = svr_train<double>(X, y, cfg);
    CHECK(res.model.weights.isZero());
    CHECK(res.primal_objective == doctest::Approx(0.0));
  }
}

TEST_CASE("all-zero features fit the best constant") {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Vector<double> y = uniform_rows(11, 1, rng, -3, 3).col(0);
    SvrConfig cfg;
    cfg.scale = false;
    const auto res = svr_train<double>(Matrix<double>::Zero(11, 2), y, cfg);
    CHECK(res.model.weights.isZero());
    std::vector<double> r(y.data(), y.data() + y.size());
    for (double& v : r) v = -v;
    double obj = 0;
    for (Index i = 0; i < 11; ++i) obj += epsilon_insensitive(res.model.bias - y(i), 0.1);
    CHECK(obj == doctest::Approx(oracle::best_bias_objective(r, 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("absolute-loss objective scales with the target") {
  // P(s y; C) = s^2 P(y; C / s) when epsilon = 0.
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const Matrix<double> X = uniform_rows(20, 2, rng);
    const Vector<double> y = uniform_rows(20, 1, rng).col(0);
    const double s = 0.5 + 3 * uniform01(rng);
    SvrConfig a;
    a.epsilon = 0;
    a.C = 2;
    a.tol = 1e-10;
    SvrConfig b = a;
    b.C = a.C / s;
    const double lhs = svr_train<double>(X, (s * y).eval(), a).primal_objective;
    const double rhs = s * s * svr_train<double>(X, y, b).primal_objective;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("tune_c is independent of the worker count") {
  const Dataset ds = gen_synthetic(6, 40, 2, 3);
  TuneResult one, many;
  {
    ThreadsGuard g("1");
    one = tune_c<double>(ds.features, ds.targets, {0.25, 1.0, 4.0}, 4, 5);
  }
  {
    ThreadsGuard g("4");
    many = tune_c<double>(ds.features, ds.targets, {0.25, 1.0, 4.0}, 4, 5);
  }
  CHECK(one.C == many.C);
  CHECK(one.cv_errors == many.cv_errors);
}

TEST_CASE("SVM initialisation is exact on 10^4 probes") {
  Rng rng(10);
  const Index d = 25;
  LinearModel<double> svm{uniform_rows(d, 1, rng, -5, 5).col(0), 3.7};
  const auto g = init_from_svm(build_layout(d, 4), svm, random_permutation(d, 3));
  const Matrix<double> X = uniform_rows(10000, d, rng, -2, 2);
  CHECK((evaluate_rows(g, X) - predict_rows(svm, X)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("flattening is sound on trained graphs") {
  Rng rng(11);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset ds = gen_synthetic(10, 40, 2, seed);
    ds = apply_standardizer(fit_standardizer(ds), ds);
    TrainConfig cfg;
    cfg.svr.C = 4;
    const auto layer = train_layer_based(ds, 3, cfg, random_permutation(10, seed));
    const Matrix<double> X = uniform_rows(200, 10, rng, -3, 3);
    const Vector<double> out = evaluate_rows(layer.graph, X);
    const Vector<double> flat = predict_rows(flatten(layer.graph), X);
    for (Index i = 0; i < X.rows(); ++i) CHECK(std::abs(out(i) - flat(i)) <= 1e-9 * (1 + std::abs(out(i))));
  }
}

TEST_CASE("layout soundness") {
  for (Index d = 1; d <= 100; d += 3)
    for (Index m = 2; m <= 7; ++m) {
      const GraphLayout layout = build_layout(d, m);
      std::vector<int> seen(static_cast<std::size_t>(d), 0);
      for (const auto& grp : layout.leaf_groups)
        for (Index j : grp) ++seen[static_cast<std::size_t>(j)];
      CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
      for (std::size_t l = 1; l < layout.layer_sizes.size(); ++l)
        CHECK(layout.layer_sizes[l] < layout.layer_sizes[l - 1]);
      CHECK(layout.layer_sizes.back() == 1);
    }
}

TEST_CASE("permuted graph equals the unpermuted layout on reordered input") {
  Rng rng(12);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Index d = 3 + static_cast<Index>(seed);
    const Permutation perm = random_permutation(d, seed);
    auto gp = make_graph<double>(build_layout(d, 2), perm);
    auto gi = make_graph<double>(build_layout(d, 2), identity_permutation(d));
    for (std::size_t l = 0; l < gp.layers.size(); ++l)
      for (std::size_t p = 0; p < gp.layers[l].size(); ++p) {
        const Vector<double> w = uniform_rows(gp.layers[l][p].model.weights.size(), 1, rng).col(0);
        const double b = 2 * uniform01(rng) - 1;
        gp.layers[l][p].model = {w, b};
        gi.layers[l][p].model = {w, b};
      }
    const Matrix<double> X = uniform_rows(30, d, rng);
    Matrix<double> reordered(30, d);
    for (Index pos = 0; pos < d; ++pos) reordered.col(pos) = X.col(perm[static_cast<std::size_t>(pos)]);
    CHECK((evaluate_rows(gp, X) - evaluate_rows(gi, reordered)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("loss-optimised training never does worse than the SVM") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const Index d = 2 + static_cast<Index>(uniform_below(rng, 7));
    const Index m = 2 + static_cast<Index>(uniform_below(rng, 3));
    Dataset ds = gen_synthetic(d, 25, 1 + static_cast<int>(uniform_below(rng, 3)), seed);
    ds = apply_standardizer(fit_standardizer(ds), ds);
    SvrConfig svr;
    svr.C = std::ldexp(1.0, static_cast<int>(uniform_below(rng, 5)) - 1);
    const auto svm = svr_fit<double>(ds.features, ds.targets, svr);
    TrainConfig cfg;
    cfg.svr = svr;
    cfg.max_sweeps = 3;
    const auto res = train_loss_optimized(ds, svm, m, random_permutation(d, seed), cfg);
    const double svm_sse = sse(predict_rows(svm, ds.features), ds.targets);
    INFO("seed " << seed);
    // The graph sums the SVM terms leaf by leaf, so its starting error equals
    // the SVM's only up to rounding.
    CHECK(res.report.final_error <= svm_sse * (1 + 1e-12));
    CHECK(res.report.final_error <= res.report.initial_error);

    // Errors after accepted updates never increase.
    double prev = res.report.initial_error;
    for (const auto& u : res.report.updates)
      if (u.accepted) {
        CHECK(u.candidate_error <= prev);
        prev = u.candidate_error;
      }
    CHECK(prev == res.report.final_error);

    // Restarting from the trained function never degrades.
    const auto again = train_loss_optimized(ds, flatten(res.graph), m, random_permutation(d, seed), cfg);
    CHECK(again.report.final_error <= again.report.initial_error);
    CHECK(again.report.initial_error == doctest::Approx(res.report.final_error).epsilon(1e-10));
  }
}

TEST_CASE("p-value decreases with |r|") {
  for (Index n : {4, 10, 50}) {
    double prev = 1.0 + 1e-15;
    for (double r = 0; r < 1; r += 0.01) {
      const double p = corr_pvalue(r, n);
      CHECK(p <= prev);
      CHECK(p >= 0.0);
      CHECK(corr_pvalue(-r, n) == p);
      prev = p;
    }
  }
}

TEST_CASE("permutation search ignores evaluation order") {
  Dataset ds = gen_synthetic(8, 40, 2, 4);
  ds = apply_standardizer(fit_standardizer(ds), ds);
  const auto svm = svr_fit<double>(ds.features, ds.targets, SvrConfig{});
  TrainConfig cfg;
  cfg.max_sweeps = 2;
  PermSearchResult<double> one, many;
  {
    ThreadsGuard g("1");
    one = random_perm_search(ds, svm, 2, cfg, 5, 9);
  }
  {
    ThreadsGuard g("3");
    many = random_perm_search(ds, svm, 2, cfg, 5, 9);
  }
  CHECK(one.best_trial == many.best_trial);
  for (std::size_t t = 0; t < one.trials.size(); ++t) {
    CHECK(one.trials[t].train_sse == many.trials[t].train_sse);
    CHECK(one.trials[t].perm == many.trials[t].perm);
  }
  double best = one.trials.front().train_sse;
  for (const auto& t : one.trials) best = std::min(best, t.train_sse);
  CHECK(one.best_train_sse <= best * (1 + 1e-12));
}

TEST_CASE("bound is monotone in every input") {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    BoundInputs b;
    b.r = 0.1 + 5 * uniform01(rng);
    b.lambda = 1 + static_cast<double>(uniform_below(rng, 8));
    b.m = 10 + static_cast<Index>(uniform_below(rng, 1000));
    b.delta = 0.001 + 0.9 * uniform01(rng);
    b.eps_loss = uniform01(rng);
    b.V = static_cast<Index>(uniform_below(rng, 50));
    const double base = bound_rhs_diff(b, 0.2, 0.1);
    auto bumped = [&](auto&& change) {
      BoundInputs c = b;
      change(c);
      return bound_rhs_diff(c, 0.2, 0.1);
    };
    CHECK(bumped([](BoundInputs& c) { c.V += 1; }) > base);
    CHECK(bumped([](BoundInputs& c) { c.eps_loss += 0.1; }) >= base);
    CHECK(bumped([](BoundInputs& c) { c.r *= 1.5; }) >= base);
    CHECK(bumped([](BoundInputs& c) { c.lambda += 1; }) >= base);
    CHECK(bumped([](BoundInputs& c) { c.m *= 2; }) <= base);
    CHECK(bumped([](BoundInputs& c) { c.delta = std::min(1.0, c.delta * 1.05); }) <= base);
  }
}

TEST_CASE("predicted beta with zero node betas is the SVM beta") {
  Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    auto g = make_graph<double>(build_layout(9, 2), random_permutation(9, static_cast<std::uint64_t>(t)));
    std::map<Index, double> zeros;
    for (auto& layer : g.layers)
      for (auto& nd : layer) {
        nd.retrained = uniform_below(rng, 2) == 1;
        nd.model.weights.setRandom();
        zeros[g.node_id(nd.layer, nd.position)] = 0.0;
      }
    const double beta = uniform01(rng);
    CHECK(predicted_beta(g, zeros, beta) == beta);
  }
}

TEST_CASE("stability norms are non-negative") {
  Dataset ds = gen_synthetic(4, 15, 2, 2);
  const Trainer<double> svm = [](const Dataset& d) { return svr_fit<double>(d.features, d.targets, SvrConfig{}); };
  const StabilityRun run = loo_stability(ds, svm, ds);
  for (double v : run.per_removal_norms) CHECK(v >= 0.0);
  CHECK(run.max_norm >= run.mean_norm);
}

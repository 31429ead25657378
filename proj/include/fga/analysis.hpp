#pragma once

#include "fga/common.hpp"
#include "fga/dataset.hpp"
#include "fga/graph.hpp"
#include "fga/svr.hpp"
#include "fga/training.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace fga {

// ---------------------------------------------------------------------------
// Generalisation bounds for the epsilon-insensitive loss. Empirical risks are
// MEAN losses here; tables elsewhere report SSE.

struct BoundInputs {
  double r = 0;       ///< sqrt(max K(x, x)) over node inputs
  double lambda = 0;  ///< weight-norm bound, the largest node fan-in
  Index m = 0;        ///< training sample count
  double delta = 0.05;
  double eps_loss = 0.1;
  Index V = 0;  ///< node count

  void validate() const {
    if (!(r > 0) || !std::isfinite(r)) throw ConfigError("bound needs r > 0");
    if (!(lambda > 0)) throw ConfigError("bound needs Lambda > 0");
    if (m < 1) throw ConfigError("bound needs m >= 1");
    // delta = 1 is admitted: the confidence term then vanishes.
    if (!(delta > 0 && delta <= 1)) throw ConfigError("delta must lie in (0, 1]");
    if (!(eps_loss >= 0)) throw ConfigError("epsilon must be non-negative");
    if (V < 0) throw ConfigError("node count must be non-negative");
  }
};

/// (2 r Lambda / sqrt(m)) (1 + sqrt(log(1/delta) / 2))
inline double bound_complexity_term(const BoundInputs& b) {
  return 2.0 * b.r * b.lambda / std::sqrt(static_cast<double>(b.m)) *
         (1.0 + std::sqrt(std::log(1.0 / b.delta) / 2.0));
}

/// Upper bound on R_FGA - R_SVM, holding with probability >= 1 - |V| delta.
inline double bound_rhs_diff(const BoundInputs& b, double train_loss_fga, double train_loss_svm) {
  b.validate();
  const double v = static_cast<double>(b.V);
  return (train_loss_fga - train_loss_svm) + v * b.eps_loss + v * bound_complexity_term(b);
}

/// Upper bound on R_FGA, holding with probability >= 1 - (|V| + 1) delta.
inline double bound_rhs_abs(const BoundInputs& b, double train_loss_fga) {
  b.validate();
  const double v1 = static_cast<double>(b.V + 1);
  return train_loss_fga + v1 * b.eps_loss + v1 * bound_complexity_term(b);
}

template <typename DA, typename DB>
double mean_epsilon_loss(const Eigen::MatrixBase<DA>& predictions, const Eigen::MatrixBase<DB>& targets,
                         double eps) {
  if (predictions.size() != targets.size() || predictions.size() == 0)
    throw DataError("mean_epsilon_loss: length mismatch or empty input");
  double total = 0;
  for (Index i = 0; i < predictions.size(); ++i)
    total += std::max(0.0, std::abs(static_cast<double>(predictions(i) - targets(i))) - eps);
  return total / static_cast<double>(predictions.size());
}

struct RadiusEstimate {
  double r = 0;
  Index lambda = 0;
  /// r == 0: every node input is zero and the bound is vacuous.
  bool degenerate = false;
};

/// r = largest Euclidean norm of any node's input vector over the rows of X;
/// Lambda = largest node fan-in.
template <typename Scalar, typename Derived>
RadiusEstimate estimate_r_lambda(const FeatureGraph<Scalar>& g, const Eigen::MatrixBase<Derived>& X) {
  const auto outputs = forward(g, X);
  double r2 = 0;
  for (Index l = 0; l < g.num_layers(); ++l)
    for (Index p = 0; p < g.layout.layer_sizes[static_cast<std::size_t>(l)]; ++p) {
      const Matrix<Scalar> in = l == 0 ? leaf_inputs(g.node(0, p), X)
                                       : Matrix<Scalar>(outputs[static_cast<std::size_t>(l - 1)].middleCols(
                                             g.layout.child_range(l, p).first, g.layout.child_range(l, p).second));
      if (in.rows() > 0) r2 = std::max(r2, static_cast<double>(in.rowwise().squaredNorm().maxCoeff()));
    }
  RadiusEstimate est;
  est.r = std::sqrt(r2);
  est.lambda = g.layout.max_fan_in();
  est.degenerate = !(est.r > 0);
  return est;
}

struct BoundReport {
  BoundInputs inputs;
  double train_loss_svm = 0;
  double train_loss_fga = 0;
  double test_loss_svm = 0;
  double test_loss_fga = 0;
  double train_sse_svm = 0;
  double train_sse_fga = 0;
  double test_sse_svm = 0;
  double test_sse_fga = 0;
  double rhs_diff = 0;
  double rhs_abs = 0;
  /// Test-set estimate of R_FGA - R_SVM.
  double lhs_diff = 0;
  bool satisfied = false;
  bool abs_satisfied = false;
  double confidence_diff = 0;
  double confidence_abs = 0;
};

/// Evaluates both bounds for a trained (SVM, FGA) pair. |V| is the graph's
/// node count.
template <typename Scalar>
BoundReport bound_report(const LinearModel<Scalar>& svm, const FeatureGraph<Scalar>& g,
                         const BasicDataset<Scalar>& train, const BasicDataset<Scalar>& test,
                         double delta, double eps_loss) {
  const RadiusEstimate est = estimate_r_lambda(g, train.features);
  if (est.degenerate) throw DataError("bound is vacuous: every node input is zero (r = 0)");
  BoundReport rep;
  rep.inputs = {est.r, static_cast<double>(est.lambda), train.num_samples(), delta, eps_loss, g.node_count()};
  rep.inputs.validate();

  const Vector<Scalar> svm_tr = predict_rows(svm, train.features);
  const Vector<Scalar> fga_tr = evaluate_rows(g, train.features);
  const Vector<Scalar> svm_te = predict_rows(svm, test.features);
  const Vector<Scalar> fga_te = evaluate_rows(g, test.features);
  rep.train_loss_svm = mean_epsilon_loss(svm_tr, train.targets, eps_loss);
  rep.train_loss_fga = mean_epsilon_loss(fga_tr, train.targets, eps_loss);
  rep.test_loss_svm = mean_epsilon_loss(svm_te, test.targets, eps_loss);
  rep.test_loss_fga = mean_epsilon_loss(fga_te, test.targets, eps_loss);
  rep.train_sse_svm = static_cast<double>(sse(svm_tr, train.targets));
  rep.train_sse_fga = static_cast<double>(sse(fga_tr, train.targets));
  rep.test_sse_svm = static_cast<double>(sse(svm_te, test.targets));
  rep.test_sse_fga = static_cast<double>(sse(fga_te, test.targets));

  rep.rhs_diff = bound_rhs_diff(rep.inputs, rep.train_loss_fga, rep.train_loss_svm);
  rep.rhs_abs = bound_rhs_abs(rep.inputs, rep.train_loss_fga);
  rep.lhs_diff = rep.test_loss_fga - rep.test_loss_svm;
  rep.satisfied = rep.lhs_diff <= rep.rhs_diff;
  rep.abs_satisfied = rep.test_loss_fga <= rep.rhs_abs;
  const double V = static_cast<double>(rep.inputs.V);
  rep.confidence_diff = 1.0 - V * delta;
  rep.confidence_abs = 1.0 - (V + 1.0) * delta;
  return rep;
}

// ---------------------------------------------------------------------------
// Leave-one-out stability.

struct StabilityRun {
  /// |e - e_\i| on the probe set for each removed training row i.
  std::vector<double> per_removal_norms;
  double mean_norm = 0;
  double max_norm = 0;
};

template <typename Scalar>
using Trainer = std::function<LinearModel<Scalar>(const BasicDataset<Scalar>&)>;

/// Retrains from scratch without each row in turn and measures how far the
/// probe-set error vector moves. Removals run concurrently.
template <typename Scalar>
StabilityRun loo_stability(const BasicDataset<Scalar>& ds, const Trainer<Scalar>& trainer,
                           const BasicDataset<Scalar>& probe) {
  const Index m = ds.num_samples();
  if (m < 2) throw ConfigError("leave-one-out stability needs at least 2 training rows");
  const Vector<Scalar> e = predict_rows(trainer(ds), probe.features) - probe.targets;
  StabilityRun run;
  run.per_removal_norms.assign(static_cast<std::size_t>(m), 0.0);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t i) {
    const Vector<Scalar> ei =
        predict_rows(trainer(ds.without_row(static_cast<Index>(i))), probe.features) - probe.targets;
    run.per_removal_norms[i] = static_cast<double>((e - ei).norm());
  });
  for (double v : run.per_removal_norms) {
    run.mean_norm += v;
    run.max_norm = std::max(run.max_norm, v);
  }
  run.mean_norm /= static_cast<double>(m);
  return run;
}

struct StabilityReport {
  StabilityRun svm;
  StabilityRun fga;
  /// fga.mean_norm / svm.mean_norm (0 when the SVM norm is 0).
  double ratio = 0;
  double predicted_beta = 0;
};

/// beta_SVM + sum over retrained nodes v of beta_v times the product of edge
/// weights on the path from v to the root. Betas for nodes that were not
/// retrained are ignored.
template <typename Scalar>
double predicted_beta(const FeatureGraph<Scalar>& g, const std::map<Index, double>& node_betas,
                      double beta_svm) {
  const auto coef = path_weights(g);
  double beta = beta_svm;
  for (Index l = 0; l < g.num_layers(); ++l)
    for (Index p = 0; p < g.layout.layer_sizes[static_cast<std::size_t>(l)]; ++p) {
      if (!g.node(l, p).retrained) continue;
      const auto it = node_betas.find(g.node_id(l, p));
      if (it == node_betas.end())
        throw ConfigError("missing beta for retrained node " + std::to_string(g.node_id(l, p)));
      beta += it->second * static_cast<double>(coef[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)]);
    }
  return beta;
}

// ---------------------------------------------------------------------------
// Complexity probe.

struct LogLogFit {
  double slope = 0;
  double intercept = 0;
  std::vector<double> residuals;
  double max_abs_residual = 0;
};

/// Least-squares line through (log x, log y).
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ComplexityReport {
  std::vector<Index> dims;
  std::vector<double> seconds;
  LogLogFit fit;
};

/// Best-of-`repeats` wall time of fn(D) for each D, then the log-log fit.
/// Runs sequentially.
ComplexityReport complexity_probe_with(const std::vector<Index>& dims,
                                       const std::function<void(Index)>& fn, int repeats = 3);

/// Times one loss-optimised sweep (identity permutation, fixed C = 1) on
/// synthetic y = (sum x)^2 data with m rows for each D.
ComplexityReport complexity_probe(const std::vector<Index>& dims, Index m, Index group_size, int repeats,
                                  std::uint64_t seed);

}  // namespace fga

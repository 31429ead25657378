#pragma once

#include "fga/common.hpp"
#include "fga/dataset.hpp"
#include "fga/graph.hpp"
#include "fga/svr.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <vector>

namespace fga {

// ---------------------------------------------------------------------------
// Metrics. SSE is the headline error everywhere.

template <typename DA, typename DB>
auto sse(const Eigen::MatrixBase<DA>& predictions, const Eigen::MatrixBase<DB>& targets) {
  using Scalar = typename DA::Scalar;
  if (predictions.size() != targets.size())
    throw DataError("sse: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(targets.size()) + " targets");
  if (predictions.size() == 0) throw DataError("sse: empty input");
  Scalar total = 0;
  for (Index i = 0; i < predictions.size(); ++i) {
    const Scalar r = predictions(i) - targets(i);
    total += r * r;
  }
  return total;
}

template <typename DA, typename DB>
auto l2_norm(const Eigen::MatrixBase<DA>& predictions, const Eigen::MatrixBase<DB>& targets) {
  return std::sqrt(sse(predictions, targets));
}

template <typename DA, typename DB>
auto rmse(const Eigen::MatrixBase<DA>& predictions, const Eigen::MatrixBase<DB>& targets) {
  using Scalar = typename DA::Scalar;
  return std::sqrt(sse(predictions, targets) / Scalar(predictions.size()));
}

/// y * node_mean / target_mean, which has mean node_mean. Returns y unchanged
/// when |target_mean| <= 1e-12.
template <typename Scalar>
Vector<Scalar> scaled_target(const Vector<Scalar>& y, Scalar node_mean, Scalar target_mean) {
  if (y.size() == 0) throw DataError("scaled_target: empty target");
  if (std::abs(target_mean) <= Scalar(1e-12)) return y;
  return y * (node_mean / target_mean);
}

// ---------------------------------------------------------------------------

struct TrainConfig {
  /// Stop once a sweep improves the training SSE by less than this fraction.
  double epsilon_stop = 1e-4;
  int max_sweeps = 10;
  SvrConfig svr;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon_stop > 0)) throw ConfigError("epsilon_stop must be positive");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
    svr.validate();
  }
};

struct NodeUpdate {
  Index sweep = 0;
  Index layer = 0;
  Index position = 0;
  Index node_id = 0;
  double candidate_error = 0;
  bool accepted = false;
};

struct TrainReport {
  double initial_error = 0;
  double final_error = 0;
  std::vector<NodeUpdate> updates;
  /// Training SSE at the end of each sweep.
  std::vector<double> sweep_errors;
  Index sweeps_run = 0;
  Index retrained_count = 0;
};

template <typename Scalar>
struct TrainResult {
  FeatureGraph<Scalar> graph;
  TrainReport report;
};

namespace detail {

// Per-layer training-set outputs with path-local refresh: changing one node
// only changes the columns on its path to the root.
template <typename Scalar>
class ForwardCache {
 public:
  ForwardCache(const FeatureGraph<Scalar>& g, const Matrix<Scalar>& X) : g_(g) {
    for (const auto& leaf : g.layers.front()) leaf_in_.push_back(leaf_inputs(leaf, X));
    outputs_ = forward(g, X);
  }

  Eigen::Ref<const Matrix<Scalar>> inputs(Index layer, Index position) const {
    if (layer == 0) return leaf_in_[static_cast<std::size_t>(position)];
    const auto [first, count] = g_.layout.child_range(layer, position);
    return outputs_[static_cast<std::size_t>(layer - 1)].middleCols(first, count);
  }

  auto output(Index layer, Index position) const {
    return outputs_[static_cast<std::size_t>(layer)].col(position);
  }

  auto root() const { return outputs_.back().col(0); }

  struct Saved {
    std::vector<Vector<Scalar>> columns;
  };

  Saved save_path(Index layer, Index position) const {
    Saved s;
    for (Index l = layer, p = position; l < g_.num_layers(); ++l, p /= g_.layout.group_size)
      s.columns.push_back(output(l, p));
    return s;
  }

  void restore_path(Index layer, Index position, const Saved& s) {
    std::size_t k = 0;
    for (Index l = layer, p = position; l < g_.num_layers(); ++l, p /= g_.layout.group_size)
      outputs_[static_cast<std::size_t>(l)].col(p) = s.columns[k++];
  }

  /// Recomputes (layer, position) and its ancestors from the current models.
  void refresh_path(Index layer, Index position) {
    for (Index l = layer, p = position; l < g_.num_layers(); ++l, p /= g_.layout.group_size)
      outputs_[static_cast<std::size_t>(l)].col(p) = node_response(g_.node(l, p).model, inputs(l, p));
  }

 private:
  const FeatureGraph<Scalar>& g_;
  std::vector<Matrix<Scalar>> leaf_in_;
  std::vector<Matrix<Scalar>> outputs_;
};

}  // namespace detail

/// Layer-based training: every node is fitted bottom-up to the raw target on
/// its current inputs, and node outputs feed the next layer. Leaves start as
/// zero models and upper layers as identities.
template <typename Scalar>
TrainResult<Scalar> train_layer_based(const BasicDataset<Scalar>& ds, Index group_size,
                                      const TrainConfig& cfg,
                                      const Permutation& perm = {}) {
  cfg.validate();
  const Permutation order = perm.empty() ? identity_permutation(ds.num_features()) : perm;
  TrainResult<Scalar> out{make_graph<Scalar>(build_layout(ds.num_features(), group_size), order), {}};
  FeatureGraph<Scalar>& g = out.graph;
  TrainReport& rep = out.report;
  const Vector<Scalar>& y = ds.targets;

  detail::ForwardCache<Scalar> cache(g, ds.features);
  double current = static_cast<double>(sse(cache.root(), y));
  rep.initial_error = current;

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double start = current;
    for (Index l = 0; l < g.num_layers(); ++l) {
      for (Index p = 0; p < static_cast<Index>(g.layers[static_cast<std::size_t>(l)].size()); ++p) {
        Node<Scalar>& nd = g.node(l, p);
        nd.model = svr_fit<Scalar>(cache.inputs(l, p), y, cfg.svr);
        nd.retrained = true;
        cache.refresh_path(l, p);
        current = static_cast<double>(sse(cache.root(), y));
        rep.updates.push_back({sweep, l, p, g.node_id(l, p), current, true});
      }
    }
    rep.sweeps_run = sweep;
    rep.sweep_errors.push_back(current);
    const double improvement = start > 0 ? (start - current) / start : 0.0;
    if (improvement < cfg.epsilon_stop) break;
  }
  rep.final_error = current;
  rep.retrained_count = g.retrained_count();
  return out;
}

/// Loss-optimised training. The graph starts as an exact copy of `svm`; each
/// sweep visits layers bottom-up and nodes left to right, refits the node to
/// the target rescaled to the node's current mean output, and keeps the refit
/// only if the global training SSE strictly decreases. Stops after a sweep
/// with no accepted refit, a relative sweep improvement below epsilon_stop, or
/// max_sweeps.
template <typename Scalar>
TrainResult<Scalar> train_loss_optimized(const BasicDataset<Scalar>& ds, const LinearModel<Scalar>& svm,
                                         Index group_size, const Permutation& perm,
                                         const TrainConfig& cfg) {
  cfg.validate();
  TrainResult<Scalar> out{init_from_svm(build_layout(ds.num_features(), group_size), svm, perm), {}};
  FeatureGraph<Scalar>& g = out.graph;
  TrainReport& rep = out.report;
  const Vector<Scalar>& y = ds.targets;
  const Scalar target_mean = y.mean();

  detail::ForwardCache<Scalar> cache(g, ds.features);
  Scalar best = sse(cache.root(), y);
  rep.initial_error = static_cast<double>(best);

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const Scalar start = best;
    bool accepted_any = false;
    for (Index l = 0; l < g.num_layers(); ++l) {
      for (Index p = 0; p < static_cast<Index>(g.layers[static_cast<std::size_t>(l)].size()); ++p) {
        Node<Scalar>& nd = g.node(l, p);
        const LinearModel<Scalar> previous = nd.model;
        const auto saved = cache.save_path(l, p);

        const Vector<Scalar> ys = scaled_target<Scalar>(y, cache.output(l, p).mean(), target_mean);
        nd.model = svr_fit<Scalar>(cache.inputs(l, p), ys, cfg.svr);
        cache.refresh_path(l, p);
        const Scalar candidate = sse(cache.root(), y);

        const bool accept = candidate < best;
        if (accept) {
          best = candidate;
          nd.retrained = true;
          accepted_any = true;
        } else {
          nd.model = previous;
          cache.restore_path(l, p, saved);
        }
        rep.updates.push_back({sweep, l, p, g.node_id(l, p), static_cast<double>(candidate), accept});
      }
    }
    rep.sweeps_run = sweep;
    rep.sweep_errors.push_back(static_cast<double>(best));
    if (!accepted_any) break;
    const Scalar improvement = start > 0 ? (start - best) / start : Scalar(0);
    if (improvement < Scalar(cfg.epsilon_stop)) break;
  }
  rep.final_error = static_cast<double>(best);
  rep.retrained_count = g.retrained_count();
  return out;
}

// ---------------------------------------------------------------------------
// Baselines.

template <typename Scalar>
struct SvmBaseline {
  LinearModel<Scalar> model;
  double C = 0;
  std::vector<double> cv_errors;
};

/// Cross-validated C, then a fit on all of ds.
template <typename Scalar>
SvmBaseline<Scalar> svm_baseline(const BasicDataset<Scalar>& ds, const std::vector<double>& grid,
                                 Index folds, std::uint64_t seed, const SvrConfig& base = {}) {
  const TuneResult tuned = tune_c<Scalar>(ds.features, ds.targets, grid, folds, seed, base);
  SvrConfig cfg = base;
  cfg.C = tuned.C;
  return {svr_fit<Scalar>(ds.features, ds.targets, cfg), tuned.C, tuned.cv_errors};
}

/// Ordinary least squares with an intercept via the normal equations, with a
/// 1e-10 ridge so singular designs still solve.
template <typename Scalar>
LinearModel<Scalar> linreg_baseline(const BasicDataset<Scalar>& ds) {
  const Index m = ds.num_samples();
  const Index d = ds.num_features();
  Matrix<Scalar> A(m, d + 1);
  A.leftCols(d) = ds.features;
  A.col(d).setOnes();
  Matrix<Scalar> normal = A.transpose() * A;
  normal.diagonal().array() += Scalar(1e-10);
  const Vector<Scalar> coef = normal.ldlt().solve(A.transpose() * ds.targets);
  if (!coef.allFinite()) throw NumericError("least-squares solve produced non-finite coefficients");
  return {coef.head(d), coef(d)};
}

}  // namespace fga

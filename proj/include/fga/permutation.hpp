#pragma once

#include "fga/common.hpp"
#include "fga/dataset.hpp"
#include "fga/graph.hpp"
#include "fga/stats.hpp"
#include "fga/training.hpp"

#include <optional>
#include <vector>

namespace fga {

/// CorrelatedEarly packs strongly correlated features into the same leaf
/// (the four-feature uniform-weight argument favours this when upper layers
/// get retrained). DecorrelatedEarly spreads them across leaves, which wins
/// when training leaves the graph mostly shallow.
enum class PermutationPreference { CorrelatedEarly, DecorrelatedEarly };

struct CorrelationStats {
  Matrix<double> pairwise_r;
  Matrix<double> pairwise_p;
  Index sig_count = 0;
  double sig_p_sum = 0;
  double sig_r_mean = 0;
  double sig_p_mean = 0;
};

/// Pairwise Pearson r and two-sided p-values over the columns of X.
/// Diagonal r is 1 and p is 0.
template <typename Derived>
std::pair<Matrix<double>, Matrix<double>> correlation_matrices(const Eigen::MatrixBase<Derived>& X) {
  const Index d = X.cols();
  Matrix<double> r = Matrix<double>::Identity(d, d);
  Matrix<double> p = Matrix<double>::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      r(i, j) = r(j, i) = pearson(X.col(i), X.col(j));
      p(i, j) = p(j, i) = corr_pvalue(r(i, j), X.rows());
    }
  return {r, p};
}

/// Counts feature pairs that share a first-layer group under `perm` and have
/// p < alpha; sums their p-values and averages their |r| and p.
template <typename Scalar>
CorrelationStats adjacent_sig_stats(const BasicDataset<Scalar>& ds, const Permutation& perm,
                                    Index group_size, double alpha = 0.05) {
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  if (static_cast<Index>(perm.size()) != ds.num_features() || !is_permutation_of_iota(perm))
    throw ConfigError("permutation does not match the feature count");
  CorrelationStats s;
  std::tie(s.pairwise_r, s.pairwise_p) = correlation_matrices(ds.features);
  double r_sum = 0;
  for (const auto& group : build_layout(ds.num_features(), group_size).leaf_groups)
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        const Index fa = perm[static_cast<std::size_t>(group[a])];
        const Index fb = perm[static_cast<std::size_t>(group[b])];
        const double pv = s.pairwise_p(fa, fb);
        if (pv < alpha) {
          ++s.sig_count;
          s.sig_p_sum += pv;
          r_sum += std::abs(s.pairwise_r(fa, fb));
        }
      }
  if (s.sig_count > 0) {
    s.sig_r_mean = r_sum / static_cast<double>(s.sig_count);
    s.sig_p_mean = s.sig_p_sum / static_cast<double>(s.sig_count);
  }
  return s;
}

/// Greedy grouping by |r|. Each new group is seeded with the unassigned
/// feature having the largest |r| to any other unassigned feature, then
/// filled (CorrelatedEarly) with the seed's most correlated unassigned
/// features or (DecorrelatedEarly) with the features whose largest |r| to the
/// group is smallest. Full groups are then ordered so each next group has the
/// highest mean |r| to the groups already placed; a short remainder group
/// stays last. Ties go to the lowest index.
template <typename Scalar>
Permutation heuristic_permutation(const BasicDataset<Scalar>& ds, Index group_size,
                                  PermutationPreference pref = PermutationPreference::CorrelatedEarly) {
  const Index d = ds.num_features();
  if (group_size < 2) throw ConfigError("group size M must be at least 2");
  if (d < 2) return identity_permutation(d);
  Matrix<double> absr = correlation_matrices(ds.features).first.cwiseAbs();
  absr.diagonal().setZero();

  std::vector<bool> used(static_cast<std::size_t>(d), false);
  const Index num_groups = (d + group_size - 1) / group_size;
  std::vector<std::vector<Index>> groups;
  for (Index g = 0; g < num_groups; ++g) {
    const Index size = g + 1 < num_groups ? group_size : d - group_size * (num_groups - 1);
    Index seed = -1;
    double seed_score = -1;
    for (Index i = 0; i < d; ++i) {
      if (used[i]) continue;
      double score = 0;
      for (Index j = 0; j < d; ++j)
        if (!used[j] && j != i) score = std::max(score, absr(i, j));
      if (score > seed_score) {
        seed_score = score;
        seed = i;
      }
    }
    std::vector<Index> group{seed};
    used[seed] = true;
    while (static_cast<Index>(group.size()) < size) {
      Index pick = -1;
      double pick_score = 0;
      for (Index j = 0; j < d; ++j) {
        if (used[j]) continue;
        double score;
        if (pref == PermutationPreference::CorrelatedEarly) {
          score = absr(seed, j);
        } else {
          score = 0;
          for (Index k : group) score = std::max(score, absr(k, j));
          score = -score;
        }
        if (pick < 0 || score > pick_score) {
          pick = j;
          pick_score = score;
        }
      }
      group.push_back(pick);
      used[pick] = true;
    }
    groups.push_back(std::move(group));
  }

  const std::size_t full = groups.back().size() == static_cast<std::size_t>(group_size)
                               ? groups.size()
                               : groups.size() - 1;
  auto mean_abs_r = [&](const std::vector<Index>& a, const std::vector<Index>& b) {
    double s = 0;
    for (Index i : a)
      for (Index j : b) s += absr(i, j);
    return s / static_cast<double>(a.size() * b.size());
  };
  std::vector<std::size_t> order;
  std::vector<bool> placed(groups.size(), false);
  if (full > 0) {
    order.push_back(0);
    placed[0] = true;
  }
  std::vector<double> affinity(groups.size(), 0.0);
  while (order.size() < full) {
    for (std::size_t g = 0; g < full; ++g)
      if (!placed[g]) affinity[g] += mean_abs_r(groups[g], groups[order.back()]);
    std::size_t next = full;
    for (std::size_t g = 0; g < full; ++g)
      if (!placed[g] && (next == full || affinity[g] > affinity[next])) next = g;
    placed[next] = true;
    order.push_back(next);
  }
  if (full < groups.size()) order.push_back(groups.size() - 1);

  Permutation perm;
  perm.reserve(static_cast<std::size_t>(d));
  for (std::size_t g : order) perm.insert(perm.end(), groups[g].begin(), groups[g].end());
  return perm;
}

/// a < b by more than relative rounding noise.
inline bool strictly_lower(double a, double b) { return a < b - 1e-12 * std::abs(b); }

struct PermTrial {
  Index trial = 0;
  /// Shuffle seed; trial 0 is the heuristic permutation and records 0.
  std::uint64_t perm_seed = 0;
  double train_sse = 0;
  Index retrained = 0;
  Permutation perm;
};

template <typename Scalar>
struct PermSearchResult {
  Permutation best_perm;
  Index best_trial = 0;
  double best_train_sse = 0;
  std::optional<double> best_test_sse;
  std::vector<PermTrial> trials;
  FeatureGraph<Scalar> best_graph;
  TrainReport best_report;
};

/// Loss-optimised training under the heuristic permutation (trial 0) and
/// n_perms - 1 seeded Fisher-Yates shuffles; keeps the lowest training SSE.
/// A later trial replaces the incumbent only if it is lower by more than
/// rounding noise (relative 1e-12), so ties go to the lowest trial index.
/// Trials run concurrently.
template <typename Scalar>
PermSearchResult<Scalar> random_perm_search(const BasicDataset<Scalar>& ds, const LinearModel<Scalar>& svm,
                                            Index group_size, const TrainConfig& cfg, Index n_perms,
                                            std::uint64_t seed, const BasicDataset<Scalar>* test = nullptr,
                                            PermutationPreference pref = PermutationPreference::CorrelatedEarly) {
  if (n_perms < 1) throw ConfigError("n_perms must be at least 1");
  const Index d = ds.num_features();
  std::vector<PermTrial> trials(static_cast<std::size_t>(n_perms));
  std::vector<TrainResult<Scalar>> runs(static_cast<std::size_t>(n_perms));
  for (Index t = 0; t < n_perms; ++t) {
    PermTrial& tr = trials[static_cast<std::size_t>(t)];
    tr.trial = t;
    if (t == 0) {
      tr.perm = heuristic_permutation(ds, group_size, pref);
    } else {
      tr.perm_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
      tr.perm = random_permutation(d, tr.perm_seed);
    }
  }
  parallel_for(trials.size(), [&](std::size_t t) {
    runs[t] = train_loss_optimized(ds, svm, group_size, trials[t].perm, cfg);
    trials[t].train_sse = runs[t].report.final_error;
    trials[t].retrained = runs[t].report.retrained_count;
  });

  std::size_t best = 0;
  for (std::size_t t = 1; t < trials.size(); ++t)
    if (strictly_lower(trials[t].train_sse, trials[best].train_sse)) best = t;

  PermSearchResult<Scalar> out;
  out.best_trial = static_cast<Index>(best);
  out.best_perm = trials[best].perm;
  out.best_train_sse = trials[best].train_sse;
  out.best_graph = std::move(runs[best].graph);
  out.best_report = std::move(runs[best].report);
  out.trials = std::move(trials);
  if (test != nullptr)
    out.best_test_sse = static_cast<double>(sse(evaluate_rows(out.best_graph, test->features), test->targets));
  return out;
}

/// One row per strict improvement of the best-so-far training SSE, in trial
/// order (same noise rule as the search), with the first-layer correlation
/// statistics of that permutation.
struct TraceRow {
  Index improvement = 0;
  Index trial = 0;
  double best_error = 0;
  Index sig_count = 0;
  double sig_p_sum = 0;
  double sig_p_mean = 0;
  double sig_r_mean = 0;
};

template <typename Scalar>
std::vector<TraceRow> improvement_trace(const PermSearchResult<Scalar>& result, const BasicDataset<Scalar>& ds,
                                        Index group_size, double alpha = 0.05) {
  std::vector<TraceRow> rows;
  double best = std::numeric_limits<double>::infinity();
  for (const PermTrial& t : result.trials) {
    if (!rows.empty() && !strictly_lower(t.train_sse, best)) continue;
    best = t.train_sse;
    const CorrelationStats s = adjacent_sig_stats(ds, t.perm, group_size, alpha);
    rows.push_back({static_cast<Index>(rows.size() + 1), t.trial, best, s.sig_count, s.sig_p_sum,
                    s.sig_p_mean, s.sig_r_mean});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Four-feature permutation argument: with unit-norm second-layer outputs that
// are equally correlated with the target, the uniform-weight residual of the
// pairing (12, 34) beats (13, 24) exactly when <X12,X34> <= <X13,X24>.

struct PairingReport {
  double corr_12_34 = 0;
  double corr_13_24 = 0;
  double err_12_34 = 0;
  double err_13_24 = 0;
};

/// Residual errors |Y - X12 - X34|^2 and |Y - X13 - X24|^2 and the two
/// cross inner products.
PairingReport pairing_errors(const Vector<double>& y, const Vector<double>& x12, const Vector<double>& x34,
                             const Vector<double>& x13, const Vector<double>& x24);

/// Builds a random instance satisfying the premise (unit vectors, equal
/// <Y, X> = K, <X12,X34> <= <X13,X24>) and evaluates it. Throws NumericError
/// if no non-degenerate construction is found after bounded retries.
PairingReport pairing_witness(Index n, std::uint64_t seed);

}  // namespace fga

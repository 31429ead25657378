#pragma once

#include "fga/common.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fga {

/// Affine predictor x -> weights . x + bias.
template <typename Scalar>
struct LinearModel {
  Vector<Scalar> weights;
  Scalar bias = Scalar(0);

  Index dim() const { return weights.size(); }
};

template <typename Scalar, typename Derived>
Scalar predict(const LinearModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim())
    throw DataError("model expects " + std::to_string(model.dim()) + " inputs, got " +
                    std::to_string(x.size()));
  return model.weights.dot(x.derived().template cast<Scalar>()) + model.bias;
}

/// One prediction per row of X.
template <typename Scalar, typename Derived>
Vector<Scalar> predict_rows(const LinearModel<Scalar>& model, const Eigen::MatrixBase<Derived>& X) {
  if (X.cols() != model.dim())
    throw DataError("model expects " + std::to_string(model.dim()) + " inputs, got " +
                    std::to_string(X.cols()));
  return (X * model.weights).array() + model.bias;
}

struct SvrConfig {
  double C = 1.0;
  double epsilon = 0.1;
  double tol = 1e-6;
  int max_passes = 10000;
  /// svr_fit standardises inputs and target per call and maps the model back.
  bool scale = true;

  void validate() const {
    if (!(C > 0) || !std::isfinite(C)) throw ConfigError("SVR C must be positive");
    if (!(epsilon >= 0) || !std::isfinite(epsilon))
      throw ConfigError("SVR epsilon must be non-negative");
    if (!(tol > 0)) throw ConfigError("SVR tol must be positive");
    if (max_passes < 1) throw ConfigError("SVR max_passes must be at least 1");
  }
};

template <typename Scalar>
struct SvrTrainResult {
  LinearModel<Scalar> model;
  Scalar primal_objective = 0;
  Scalar dual_objective = 0;
  Scalar duality_gap = 0;
  Index passes_used = 0;
};

template <typename Scalar>
Scalar epsilon_insensitive(Scalar residual, Scalar eps) {
  return std::max(Scalar(0), std::abs(residual) - eps);
}

/// 0.5 |w|^2 + C sum max(0, |w.x_i + b - y_i| - eps)
template <typename Scalar, typename DX, typename DY>
Scalar svr_primal_objective(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                            const LinearModel<Scalar>& model, double C, double eps) {
  const Vector<Scalar> f = predict_rows(model, X);
  Scalar loss = 0;
  for (Index i = 0; i < f.size(); ++i) loss += epsilon_insensitive<Scalar>(f(i) - y(i), Scalar(eps));
  return Scalar(0.5) * model.weights.squaredNorm() + Scalar(C) * loss;
}

/// Midpoint of the minimising interval of b -> sum_i max(0, |r_i + b| - eps).
/// The objective is piecewise linear with slope -m + (number of breakpoints
/// passed), so the minimisers are exactly the two middle breakpoints of the
/// 2m values {-r_i - eps, -r_i + eps}.
template <typename Scalar, typename Derived>
Scalar optimal_bias(const Eigen::MatrixBase<Derived>& residuals, Scalar eps) {
  const Index m = residuals.size();
  std::vector<Scalar> bp;
  bp.reserve(static_cast<std::size_t>(2 * m));
  for (Index i = 0; i < m; ++i) {
    bp.push_back(-residuals(i) - eps);
    bp.push_back(-residuals(i) + eps);
  }
  auto mid = bp.begin() + m;
  std::nth_element(bp.begin(), mid, bp.end());
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(bp.begin(), mid);
  return lower + (upper - lower) / Scalar(2);
}

namespace detail {

// Kernel rows K(i, .) = X x_i, from a cached Gram matrix when it fits.
template <typename Scalar>
class LinearKernel {
 public:
  static constexpr Index kGramLimit = 4096;

  explicit LinearKernel(const Eigen::Ref<const Matrix<Scalar>>& X) : X_(X) {
    diag_ = X.rowwise().squaredNorm();
    if (X.rows() <= kGramLimit) {
      gram_.noalias() = X * X.transpose();
      cached_ = true;
    } else {
      row_.resize(X.rows());
    }
  }

  const Vector<Scalar>& diag() const { return diag_; }

  // Valid until the next call.
  Eigen::Ref<const Vector<Scalar>> row(Index i) {
    if (cached_) return gram_.col(i);
    row_.noalias() = X_ * X_.row(i).transpose();
    return row_;
  }

 private:
  Eigen::Ref<const Matrix<Scalar>> X_;
  Vector<Scalar> diag_;
  Matrix<Scalar> gram_;
  Vector<Scalar> row_;
  bool cached_ = false;
};

}  // namespace detail

/// Linear epsilon-SVR with an unregularised bias.
///
/// Solves the dual over the 2m variables (alpha_i, alpha*_i) in [0, C] subject
/// to sum_i (alpha_i - alpha*_i) = 0. The equality constraint couples the
/// coordinates, so each step jointly minimises over the most violating pair
/// (second-order working-set selection). Weights are recovered as
/// w = sum_i (alpha_i - alpha*_i) x_i and the bias as the midpoint of the
/// primal-optimal interval for that w. Every pass (m pair updates) the duality
/// gap is evaluated and the solver returns once it is <= tol * max(1, |primal|).
template <typename Scalar>
SvrTrainResult<Scalar> svr_train(const Eigen::Ref<const Matrix<Scalar>>& X,
                                 const Eigen::Ref<const Vector<Scalar>>& y, const SvrConfig& cfg) {
  cfg.validate();
  const Index m = X.rows();
  const Index d = X.cols();
  if (m < 1 || d < 1) throw DataError("svr_train needs at least one row and one feature");
  if (y.size() != m) throw DataError("svr_train: target length does not match row count");
  if (!X.allFinite() || !y.allFinite()) throw NumericError("svr_train: non-finite input");

  const Scalar C = Scalar(cfg.C);
  const Scalar eps = Scalar(cfg.epsilon);

  SvrTrainResult<Scalar> result;

  auto finish = [&](const Vector<Scalar>& beta, Scalar linear_term) {
    LinearModel<Scalar>& model = result.model;
    model.weights.noalias() = X.transpose() * beta;
    const Vector<Scalar> f = X * model.weights;
    model.bias = optimal_bias<Scalar>(f - y, eps);
    const Scalar half_norm = Scalar(0.5) * model.weights.squaredNorm();
    Scalar loss = 0;
    for (Index i = 0; i < m; ++i) loss += epsilon_insensitive<Scalar>(f(i) + model.bias - y(i), eps);
    result.primal_objective = half_norm + C * loss;
    result.dual_objective = -half_norm - linear_term;
    result.duality_gap = result.primal_objective - result.dual_objective;
  };

  detail::LinearKernel<Scalar> kernel(X);
  const Vector<Scalar>& qd = kernel.diag();
  if (qd.maxCoeff() == Scalar(0)) {
    // All-zero design: w = 0 and the bias minimises the constant's loss.
    finish(Vector<Scalar>::Zero(m), Scalar(0));
    return result;
  }

  // Variable k < m is alpha_k (sign +1), k >= m is alpha*_{k-m} (sign -1).
  // Gradient of 0.5 a'Qa + p'a is sign_k f_i + p_k with f = X w.
  const Index n = 2 * m;
  Vector<Scalar> alpha = Vector<Scalar>::Zero(n);
  Vector<Scalar> p(n);
  p.head(m) = eps - y.array();
  p.tail(m) = eps + y.array();
  Vector<Scalar> f = Vector<Scalar>::Zero(m);

  auto sample = [m](Index k) { return k < m ? k : k - m; };
  auto sign = [m](Index k) { return k < m ? Scalar(1) : Scalar(-1); };
  auto grad = [&](Index k) { return sign(k) * f(sample(k)) + p(k); };
  auto in_up = [&](Index k) { return k < m ? alpha(k) < C : alpha(k) > Scalar(0); };
  auto in_low = [&](Index k) { return k < m ? alpha(k) > Scalar(0) : alpha(k) < C; };

  auto beta_of = [&]() -> Vector<Scalar> { return alpha.head(m) - alpha.tail(m); };
  auto linear_term = [&]() { return p.dot(alpha); };

  const Scalar tau = Scalar(1e-12);
  const Scalar kkt_floor = Scalar(1e-11) * (Scalar(1) + p.cwiseAbs().maxCoeff());
  const Index max_iter = static_cast<Index>(cfg.max_passes) * m;
  Index iter = 0;

  Scalar gmax = 0, gmax2 = 0;
  Index i = -1;
  // Maximal violating index i over I_up, and the largest I_low score.
  auto select = [&] {
    gmax = gmax2 = -std::numeric_limits<Scalar>::infinity();
    i = -1;
    for (Index k = 0; k < n; ++k) {
      const Scalar g = grad(k);
      if (in_up(k) && -sign(k) * g > gmax) {
        gmax = -sign(k) * g;
        i = k;
      }
      if (in_low(k)) gmax2 = std::max(gmax2, sign(k) * g);
    }
    return i >= 0 && gmax + gmax2 > kkt_floor;
  };
  auto checkpoint = [&] {
    f.noalias() = X * (X.transpose() * beta_of());
    finish(beta_of(), linear_term());
    result.passes_used = (iter + m - 1) / m;
  };

  for (;;) {
    bool violating = select();
    if (!violating || iter >= max_iter || (iter > 0 && iter % m == 0)) {
      checkpoint();
      if (iter >= max_iter || result.duality_gap <= Scalar(cfg.tol) * std::max(Scalar(1), std::abs(result.primal_objective))) return result;
      // Reselect against the refreshed gradients.
      violating = select();
      if (!violating) return result;
    }

    const Index si = sample(i);
    const auto Ki = kernel.row(si);
    Index j = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index k = 0; k < n; ++k) {
      if (!in_low(k)) continue;
      const Scalar diff = gmax + sign(k) * grad(k);
      if (diff <= Scalar(0)) continue;
      const Index sk = sample(k);
      Scalar a = qd(si) + qd(sk) - Scalar(2) * Ki(sk);
      if (a <= Scalar(0)) a = tau;
      const Scalar obj = -diff * diff / a;
      if (obj < best) {
        best = obj;
        j = k;
      }
    }
    if (j < 0) {
      checkpoint();
      return result;
    }

    const Index sj = sample(j);
    Scalar quad = qd(si) + qd(sj) - Scalar(2) * Ki(sj);
    if (quad <= Scalar(0)) quad = tau;
    const Scalar old_ai = alpha(i);
    const Scalar old_aj = alpha(j);
    const Scalar gi = grad(i);
    const Scalar gj = grad(j);
    Scalar& ai = alpha(i);
    Scalar& aj = alpha(j);

    if (sign(i) != sign(j)) {
      const Scalar delta = (-gi - gj) / quad;
      const Scalar diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) {
          aj = 0;
          ai = diff;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > 0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      const Scalar delta = (gi - gj) / quad;
      const Scalar sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }

    const Scalar dbi = sign(i) * (ai - old_ai);
    const Scalar dbj = sign(j) * (aj - old_aj);
    if (si == sj) {
      if (dbi + dbj != Scalar(0)) f += (dbi + dbj) * Ki;
    } else {
      if (dbi != Scalar(0)) f += dbi * Ki;
      if (dbj != Scalar(0)) f += dbj * kernel.row(sj);
    }
    ++iter;
  }
}

/// svr_train on columns and target standardised to zero mean and unit sample
/// variance (constant columns map to zero), with the model mapped back to the
/// original units. A constant target gives w = 0, b = that constant. With
/// cfg.scale off, or fewer than 2 rows, this is plain svr_train.
template <typename Scalar>
LinearModel<Scalar> svr_fit(const Eigen::Ref<const Matrix<Scalar>>& X, const Eigen::Ref<const Vector<Scalar>>& y,
                            const SvrConfig& cfg) {
  const Index m = X.rows();
  if (!cfg.scale || m < 2) return svr_train<Scalar>(X, y, cfg).model;
  if (y.size() != m) throw DataError("svr_fit: target length does not match row count");
  if (!X.allFinite() || !y.allFinite()) throw NumericError("svr_fit: non-finite input");
  const Scalar denom = Scalar(m - 1);
  const Vector<Scalar> mu_x = X.colwise().mean().transpose();
  Vector<Scalar> inv_sd(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const Scalar sd = std::sqrt((X.col(j).array() - mu_x(j)).square().sum() / denom);
    inv_sd(j) = sd > Scalar(0) ? Scalar(1) / sd : Scalar(0);
  }
  const Scalar mu_y = y.mean();
  const Scalar sd_y = std::sqrt((y.array() - mu_y).square().sum() / denom);
  if (!(sd_y > Scalar(0))) return {Vector<Scalar>::Zero(X.cols()), mu_y};

  const Matrix<Scalar> Xs = (X.rowwise() - mu_x.transpose()) * inv_sd.asDiagonal();
  const Vector<Scalar> ys = (y.array() - mu_y) / sd_y;
  const LinearModel<Scalar> inner = svr_train<Scalar>(Xs, ys, cfg).model;
  LinearModel<Scalar> out;
  out.weights = sd_y * inner.weights.cwiseProduct(inv_sd);
  out.bias = mu_y + sd_y * inner.bias - out.weights.dot(mu_x);
  return out;
}

/// C = 2^-2 ... 2^5.
inline std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int e = -2; e <= 5; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

struct TuneResult {
  double C = 0;
  /// Mean validation SSE per grid entry.
  std::vector<double> cv_errors;
};

/// k-fold cross-validated choice of C. Folds come from a seeded shuffle
/// (position mod k). Ties within 1e-12 relative go to the smaller C.
template <typename Scalar>
TuneResult tune_c(const Eigen::Ref<const Matrix<Scalar>>& X, const Eigen::Ref<const Vector<Scalar>>& y,
                  const std::vector<double>& grid, Index k, std::uint64_t seed,
                  const SvrConfig& base = {}) {
  const Index m = X.rows();
  if (grid.empty()) throw ConfigError("C grid must not be empty");
  for (double c : grid)
    if (!(c > 0)) throw ConfigError("C grid values must be positive");
  if (k < 2) throw ConfigError("fold count must be at least 2");
  if (k > m) throw ConfigError("fold count " + std::to_string(k) + " exceeds sample count " +
                               std::to_string(m));

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  shuffle(order, rng);
  std::vector<Index> fold_of(static_cast<std::size_t>(m));
  for (Index pos = 0; pos < m; ++pos) fold_of[order[pos]] = pos % k;

  struct Fold {
    Matrix<Scalar> Xtr, Xva;
    Vector<Scalar> ytr, yva;
  };
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (Index f = 0; f < k; ++f) {
    std::vector<Index> tr, va;
    for (Index r = 0; r < m; ++r) (fold_of[r] == f ? va : tr).push_back(r);
    Fold& fold = folds[f];
    fold.Xtr = X(tr, Eigen::all);
    fold.ytr = y(tr);
    fold.Xva = X(va, Eigen::all);
    fold.yva = y(va);
  }

  const std::size_t jobs = grid.size() * static_cast<std::size_t>(k);
  std::vector<double> sse(jobs, 0.0);
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t g = job / static_cast<std::size_t>(k);
    const Fold& fold = folds[job % static_cast<std::size_t>(k)];
    SvrConfig cfg = base;
    cfg.C = grid[g];
    const Vector<Scalar> pred = predict_rows(svr_fit<Scalar>(fold.Xtr, fold.ytr, cfg), fold.Xva);
    sse[job] = static_cast<double>((pred - fold.yva).squaredNorm());
  });

  TuneResult out;
  out.cv_errors.assign(grid.size(), 0.0);
  for (std::size_t job = 0; job < jobs; ++job)
    out.cv_errors[job / static_cast<std::size_t>(k)] += sse[job] / static_cast<double>(k);

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = out.cv_errors[g], b = out.cv_errors[best];
    const bool tie = std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
    if ((tie && grid[g] < grid[best]) || (!tie && a < b)) best = g;
  }
  out.C = grid[best];
  return out;
}

}  // namespace fga

#pragma once

// Dense reference solver for the linear epsilon-SVR dual. Shares no code with
// svr_train: projected accelerated gradient on the full 2m-variable dual, an
// exact projection onto {0 <= a <= C, sum sign_k a_k = 0} by bisection on the
// multiplier, and a golden-section search for the bias. Small problems only.

#include "fga/svr.hpp"

#include <Eigen/Eigenvalues>

namespace fga {

template <typename Scalar>
struct QpOracleResult {
  LinearModel<Scalar> model;
  Scalar primal_objective = 0;
  Scalar dual_objective = 0;
  Scalar duality_gap = 0;
  Index iterations = 0;
};

namespace detail {

// Euclidean projection of z onto the box [0, C] intersected with the
// hyperplane sum_k s_k a_k = 0, s = (+1,...,+1,-1,...,-1).
template <typename Scalar>
Vector<Scalar> project_box_hyperplane(const Vector<Scalar>& z, Index m, Scalar C) {
  auto clipped = [&](Scalar lambda) {
    Vector<Scalar> a(z.size());
    for (Index k = 0; k < z.size(); ++k) {
      const Scalar s = k < m ? Scalar(1) : Scalar(-1);
      a(k) = std::clamp(z(k) - lambda * s, Scalar(0), C);
    }
    return a;
  };
  auto residual = [&](Scalar lambda) {
    const Vector<Scalar> a = clipped(lambda);
    return a.head(m).sum() - a.tail(m).sum();
  };
  // residual is non-increasing in lambda.
  Scalar lo = -(z.cwiseAbs().maxCoeff() + C) - 1;
  Scalar hi = -lo;
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = (lo + hi) / 2;
    if (residual(mid) > 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<Scalar>::epsilon() * (std::abs(lo) + std::abs(hi)))
      break;
  }
  return clipped((lo + hi) / 2);
}

template <typename Scalar>
Scalar golden_bias(const Vector<Scalar>& f, const Vector<Scalar>& y, Scalar eps) {
  auto loss = [&](Scalar b) {
    Scalar s = 0;
    for (Index i = 0; i < f.size(); ++i) s += std::max(Scalar(0), std::abs(f(i) + b - y(i)) - eps);
    return s;
  };
  const Vector<Scalar> r = y - f;
  Scalar lo = r.minCoeff() - eps - 1;
  Scalar hi = r.maxCoeff() + eps + 1;
  const Scalar phi = (std::sqrt(Scalar(5)) - 1) / 2;
  for (int it = 0; it < 300 && hi - lo > Scalar(1e-15) * (1 + std::abs(lo) + std::abs(hi)); ++it) {
    const Scalar a = hi - phi * (hi - lo);
    const Scalar b = lo + phi * (hi - lo);
    if (loss(a) <= loss(b))
      hi = b;
    else
      lo = a;
  }
  return (lo + hi) / 2;
}

}  // namespace detail

/// Stops when the duality gap is <= cfg.tol / 10 or after max_iterations.
template <typename Scalar>
QpOracleResult<Scalar> qp_oracle_train(const Matrix<Scalar>& X, const Vector<Scalar>& y,
                                       const SvrConfig& cfg, Index max_iterations = 2'000'000) {
  cfg.validate();
  const Index m = X.rows();
  if (m > 50) throw ConfigError("qp_oracle_train is a dense method limited to m <= 50");
  if (m < 1 || X.cols() < 1 || y.size() != m) throw DataError("qp_oracle_train: bad shapes");

  const Scalar C = Scalar(cfg.C);
  const Scalar eps = Scalar(cfg.epsilon);
  const Index n = 2 * m;
  // Q = S [K K; K K] S with S = diag(+1, -1), linear term p.
  const Matrix<Scalar> K = X * X.transpose();
  Matrix<Scalar> Q(n, n);
  Q << K, -K, -K, K;
  Vector<Scalar> p(n);
  p.head(m) = eps - y.array();
  p.tail(m) = eps + y.array();

  const Scalar lipschitz =
      std::max(Scalar(2) * Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(K, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .maxCoeff(),
               Scalar(1e-12));
  const Scalar step = Scalar(1) / lipschitz;

  QpOracleResult<Scalar> out;
  auto evaluate = [&](const Vector<Scalar>& a) {
    const Vector<Scalar> beta = a.head(m) - a.tail(m);
    out.model.weights = X.transpose() * beta;
    const Vector<Scalar> f = X * out.model.weights;
    out.model.bias = detail::golden_bias<Scalar>(f, y, eps);
    Scalar loss = 0;
    for (Index i = 0; i < m; ++i)
      loss += std::max(Scalar(0), std::abs(f(i) + out.model.bias - y(i)) - eps);
    const Scalar half_norm = Scalar(0.5) * out.model.weights.squaredNorm();
    out.primal_objective = half_norm + C * loss;
    out.dual_objective = -(half_norm + p.dot(a));
    out.duality_gap = out.primal_objective - out.dual_objective;
  };
  auto objective = [&](const Vector<Scalar>& a) { return Scalar(0.5) * a.dot(Q * a) + p.dot(a); };

  Vector<Scalar> a = Vector<Scalar>::Zero(n);
  Vector<Scalar> v = a;
  Scalar t = 1;
  Scalar last = objective(a);
  for (Index it = 1; it <= max_iterations; ++it) {
    Vector<Scalar> next = detail::project_box_hyperplane<Scalar>(v - step * (Q * v + p), m, C);
    const Scalar value = objective(next);
    if (value > last) {
      // A plain projected step from `a` cannot increase the objective, so
      // failure after a restart means rounding has taken over.
      if (t == 1) break;
      // Adaptive restart.
      t = 1;
      v = a;
      continue;
    }
    const Scalar t_next = (1 + std::sqrt(1 + 4 * t * t)) / 2;
    v = next + ((t - 1) / t_next) * (next - a);
    a = std::move(next);
    t = t_next;
    last = value;
    out.iterations = it;
    if (it % 50 == 0) {
      evaluate(a);
      if (out.duality_gap <= Scalar(cfg.tol) / 10) return out;
    }
  }
  evaluate(a);
  return out;
}

}  // namespace fga

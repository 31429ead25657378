#pragma once

#include "fga/common.hpp"

namespace fga {

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta_regularized(double x, double a, double b);

/// Two-sided p-value for a Pearson correlation r over n samples:
/// t = r sqrt((n-2)/(1-r^2)) against Student t with n-2 degrees of freedom,
/// which equals I_{1-r^2}((n-2)/2, 1/2).
double corr_pvalue(double r, Index n);

/// Sample Pearson correlation; 0 when either input is constant.
template <typename DA, typename DB>
double pearson(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.size() != b.size())
    throw DataError("pearson: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (a.size() < 2) throw DataError("pearson needs at least two samples");
  const auto ac = (a.template cast<double>().array() - a.template cast<double>().mean()).eval();
  const auto bc = (b.template cast<double>().array() - b.template cast<double>().mean()).eval();
  const double saa = ac.square().sum();
  const double sbb = bc.square().sum();
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  const double r = (ac * bc).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace fga

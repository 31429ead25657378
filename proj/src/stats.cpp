#include "fga/stats.hpp"

#include <cmath>
#include <limits>

namespace fga {

namespace {

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr int max_terms = 10000;
  constexpr double tolerance = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_terms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= tolerance) break;
  }
  return h;
}

}  // namespace

double incomplete_beta_regularized(double x, double a, double b) {
  if (!(a > 0) || !(b > 0)) throw NumericError("incomplete beta needs a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericError("incomplete beta needs 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double corr_pvalue(double r, Index n) {
  if (n < 3) throw DataError("corr_pvalue needs n >= 3, got " + std::to_string(n));
  if (!(std::abs(r) <= 1.0)) throw DataError("correlation must lie in [-1, 1]");
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  return std::clamp(incomplete_beta_regularized(1.0 - r2, df / 2.0, 0.5), 0.0, 1.0);
}

}  // namespace fga

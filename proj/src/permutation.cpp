#include "fga/permutation.hpp"

#include <cmath>
#include <numbers>

namespace fga {

namespace {

Vector<double> gaussian_vector(Index n, Rng& rng) {
  Vector<double> v(n);
  for (Index i = 0; i < n; ++i) {
    // Box-Muller on (0, 1].
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    v(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return v;
}

}  // namespace

PairingReport pairing_errors(const Vector<double>& y, const Vector<double>& x12, const Vector<double>& x34,
                             const Vector<double>& x13, const Vector<double>& x24) {
  const Index n = y.size();
  if (x12.size() != n || x34.size() != n || x13.size() != n || x24.size() != n)
    throw DataError("pairing_errors: vectors must share one length");
  PairingReport r;
  r.corr_12_34 = x12.dot(x34);
  r.corr_13_24 = x13.dot(x24);
  r.err_12_34 = (y - x12 - x34).squaredNorm();
  r.err_13_24 = (y - x13 - x24).squaredNorm();
  return r;
}

PairingReport pairing_witness(Index n, std::uint64_t seed) {
  if (n < 4) throw ConfigError("pairing_witness needs n >= 4");
  Rng rng(seed);
  constexpr int max_attempts = 100;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Vector<double> y = gaussian_vector(n, rng);
    if (y.norm() < 1e-8) continue;
    y.normalize();
    const double k = 0.1 + 0.8 * uniform01(rng);

    // X = K Y + sqrt(1 - K^2) Z with Z a unit vector orthogonal to Y, so that
    // |X| = 1 and <Y, X> = K for all four outputs.
    std::vector<Vector<double>> xs;
    for (int v = 0; v < 4; ++v) {
      Vector<double> z = gaussian_vector(n, rng);
      z -= z.dot(y) * y;
      if (z.norm() < 1e-8) break;
      z.normalize();
      Vector<double> x = k * y + std::sqrt(1.0 - k * k) * z;
      x.normalize();
      xs.push_back(std::move(x));
    }
    if (xs.size() != 4) continue;

    // Label the pairings so the premise <X12,X34> <= <X13,X24> holds.
    if (xs[0].dot(xs[1]) > xs[2].dot(xs[3])) {
      std::swap(xs[0], xs[2]);
      std::swap(xs[1], xs[3]);
    }
    return pairing_errors(y, xs[0], xs[1], xs[2], xs[3]);
  }
  throw NumericError("pairing_witness: no non-degenerate construction after " +
                     std::to_string(max_attempts) + " attempts");
}

}  // namespace fga

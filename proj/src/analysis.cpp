#include "fga/analysis.hpp"

#include <set>

namespace fga {

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("fit_loglog needs >= 2 paired points");
  const auto n = static_cast<Index>(x.size());
  Matrix<double> A(n, 2);
  Vector<double> b(n);
  for (Index i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw NumericError("fit_loglog needs positive values");
    A(i, 0) = std::log(x[i]);
    A(i, 1) = 1.0;
    b(i) = std::log(y[i]);
  }
  const Vector<double> coef = (A.transpose() * A).ldlt().solve(A.transpose() * b);
  LogLogFit fit;
  fit.slope = coef(0);
  fit.intercept = coef(1);
  const Vector<double> res = b - A * coef;
  fit.residuals.assign(res.data(), res.data() + n);
  fit.max_abs_residual = res.cwiseAbs().maxCoeff();
  return fit;
}

ComplexityReport complexity_probe_with(const std::vector<Index>& dims, const std::function<void(Index)>& fn,
                                       int repeats) {
  if (std::set<Index>(dims.begin(), dims.end()).size() < 3)
    throw ConfigError("complexity probe needs at least 3 distinct feature counts");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  ComplexityReport rep;
  rep.dims = dims;
  std::vector<double> xs;
  for (Index d : dims) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      fn(d);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      best = std::min(best, elapsed.count());
    }
    rep.seconds.push_back(std::max(best, 1e-9));
    xs.push_back(static_cast<double>(d));
  }
  rep.fit = fit_loglog(xs, rep.seconds);
  return rep;
}

ComplexityReport complexity_probe(const std::vector<Index>& dims, Index m, Index group_size, int repeats,
                                  std::uint64_t seed) {
  TrainConfig cfg;
  cfg.max_sweeps = 1;
  cfg.svr.C = 1.0;
  std::map<Index, std::pair<Dataset, LinearModel<double>>> problems;
  for (Index d : dims) {
    Dataset ds = gen_synthetic(d, m, 2, derive_seed(seed, static_cast<std::uint64_t>(d)));
    LinearModel<double> svm = svr_train<double>(ds.features, ds.targets, cfg.svr).model;
    problems.emplace(d, std::make_pair(std::move(ds), std::move(svm)));
  }
  return complexity_probe_with(
      dims,
      [&](Index d) {
        const auto& [ds, svm] = problems.at(d);
        train_loss_optimized(ds, svm, group_size, identity_permutation(d), cfg);
      },
      repeats);
}

}  // namespace fga

#pragma once

#include "fga/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fga {

/// Dense regression sample: one row per observation.
template <typename Scalar>
struct BasicDataset {
  Matrix<Scalar> features;
  Vector<Scalar> targets;
  std::vector<std::string> feature_names;

  Index num_samples() const { return features.rows(); }
  Index num_features() const { return features.cols(); }

  /// Rows selected by index, in the given order.
  BasicDataset rows(const std::vector<Index>& idx) const {
    BasicDataset out;
    out.features.resize(static_cast<Index>(idx.size()), features.cols());
    out.targets.resize(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.features.row(static_cast<Index>(r)) = features.row(idx[r]);
      out.targets(static_cast<Index>(r)) = targets(idx[r]);
    }
    out.feature_names = feature_names;
    return out;
  }

  BasicDataset without_row(Index i) const {
    std::vector<Index> keep;
    keep.reserve(static_cast<std::size_t>(num_samples() - 1));
    for (Index r = 0; r < num_samples(); ++r)
      if (r != i) keep.push_back(r);
    return rows(keep);
  }
};

using Dataset = BasicDataset<double>;

std::vector<std::string> default_feature_names(Index d);

/// Throws DataError if any Dataset invariant is broken.
void validate(const Dataset& ds);

/// Sparse `<target> <index>:<value> ...` text, 1-based strictly increasing
/// indices. Absent entries are zero; the feature count is the largest index
/// seen unless `min_features` is larger.
Dataset load_libsvm(const std::filesystem::path& path, Index min_features = 0);
Dataset parse_libsvm(const std::string& text, Index min_features = 0);
void write_libsvm(const Dataset& ds, const std::filesystem::path& path);

/// Plain numeric CSV with a header row; no quoting.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);
Dataset parse_csv(const std::string& text, const std::string& target_column);

/// y = (sum_j x_j)^power with x ~ U[0,1)^D.
Dataset gen_synthetic(Index num_features, Index num_samples, int power, std::uint64_t seed);

/// Order-sensitive FNV-1a digest of every feature and target bit pattern.
std::uint64_t checksum(const Dataset& ds);

struct SplitSpec {
  Index n_train = 0;
  std::uint64_t seed = 0;
};

template <typename Scalar>
std::pair<BasicDataset<Scalar>, BasicDataset<Scalar>> split(const BasicDataset<Scalar>& ds,
                                                            const SplitSpec& spec) {
  const Index m = ds.num_samples();
  if (spec.n_train < 1 || spec.n_train >= m)
    throw ConfigError("n_train must lie in [1, " + std::to_string(m - 1) + "], got " +
                      std::to_string(spec.n_train));
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(spec.seed);
  shuffle(order, rng);
  const auto cut = order.begin() + spec.n_train;
  return {ds.rows({order.begin(), cut}), ds.rows({cut, order.end()})};
}

/// Per-feature affine map x -> (x - mean) * inv_scale. Constant features get
/// inv_scale = 0 so they map to 0.
template <typename Scalar>
struct Standardizer {
  Vector<Scalar> mean;
  Vector<Scalar> inv_scale;
};

template <typename Scalar>
Standardizer<Scalar> fit_standardizer(const BasicDataset<Scalar>& train) {
  const Index m = train.num_samples();
  if (m < 1) throw DataError("cannot fit a standardizer on an empty dataset");
  Standardizer<Scalar> s;
  s.mean = train.features.colwise().mean().transpose();
  s.inv_scale = Vector<Scalar>::Zero(train.num_features());
  if (m < 2) return s;
  for (Index j = 0; j < train.num_features(); ++j) {
    const Scalar ss = (train.features.col(j).array() - s.mean(j)).square().sum();
    const Scalar sd = std::sqrt(ss / Scalar(m - 1));
    if (sd > Scalar(0)) s.inv_scale(j) = Scalar(1) / sd;
  }
  return s;
}

template <typename Scalar>
BasicDataset<Scalar> apply_standardizer(const Standardizer<Scalar>& s,
                                        const BasicDataset<Scalar>& ds) {
  if (s.mean.size() != ds.num_features())
    throw DataError("standardizer fitted on " + std::to_string(s.mean.size()) +
                    " features applied to " + std::to_string(ds.num_features()));
  BasicDataset<Scalar> out = ds;
  out.features = ((ds.features.rowwise() - s.mean.transpose()).array().rowwise() *
                  s.inv_scale.transpose().array())
                     .matrix();
  return out;
}

}  // namespace fga

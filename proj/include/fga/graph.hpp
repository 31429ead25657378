#pragma once

#include "fga/common.hpp"
#include "fga/svr.hpp"

#include <string>
#include <vector>

namespace fga {

/// Shape of a feature graph. Layer 0 holds the leaves; each leaf reads a
/// consecutive block of at most `group_size` positions of the permuted feature
/// order, and each higher node reads a consecutive block of at most
/// `group_size` nodes of the layer below. The last layer is the single root.
struct GraphLayout {
  Index num_features = 0;
  Index group_size = 0;
  std::vector<Index> layer_sizes;
  std::vector<std::vector<Index>> leaf_groups;

  Index num_layers() const { return static_cast<Index>(layer_sizes.size()); }

  Index node_count() const {
    Index n = 0;
    for (Index s : layer_sizes) n += s;
    return n;
  }

  /// [first, first + count) in layer - 1, for layer >= 1.
  std::pair<Index, Index> child_range(Index layer, Index position) const {
    const Index first = position * group_size;
    const Index below = layer_sizes[static_cast<std::size_t>(layer - 1)];
    return {first, std::min(group_size, below - first)};
  }

  Index fan_in(Index layer, Index position) const {
    if (layer == 0) return static_cast<Index>(leaf_groups[static_cast<std::size_t>(position)].size());
    return child_range(layer, position).second;
  }

  Index max_fan_in() const {
    Index best = 0;
    for (Index l = 0; l < num_layers(); ++l)
      for (Index p = 0; p < layer_sizes[static_cast<std::size_t>(l)]; ++p)
        best = std::max(best, fan_in(l, p));
    return best;
  }
};

inline GraphLayout build_layout(Index num_features, Index group_size) {
  if (group_size < 2) throw ConfigError("group size M must be at least 2");
  if (num_features < 1) throw ConfigError("feature count D must be at least 1");
  GraphLayout layout;
  layout.num_features = num_features;
  layout.group_size = group_size;
  for (Index start = 0; start < num_features; start += group_size) {
    std::vector<Index> group;
    for (Index j = start; j < std::min(start + group_size, num_features); ++j) group.push_back(j);
    layout.leaf_groups.push_back(std::move(group));
  }
  Index size = static_cast<Index>(layout.leaf_groups.size());
  layout.layer_sizes.push_back(size);
  while (size > 1) {
    size = (size + group_size - 1) / group_size;
    layout.layer_sizes.push_back(size);
  }
  return layout;
}

/// Throws DataError when the layout is not what build_layout would produce
/// for its (num_features, group_size).
inline void validate(const GraphLayout& layout) {
  const GraphLayout expected = build_layout(layout.num_features, layout.group_size);
  if (expected.layer_sizes != layout.layer_sizes || expected.leaf_groups != layout.leaf_groups)
    throw DataError("graph layout is inconsistent with D=" + std::to_string(layout.num_features) +
                    ", M=" + std::to_string(layout.group_size));
}

template <typename Scalar>
struct Node {
  Index layer = 0;
  Index position = 0;
  /// Original feature indices for leaves, child positions otherwise.
  std::vector<Index> inputs;
  LinearModel<Scalar> model;
  bool retrained = false;
};

template <typename Scalar>
struct FeatureGraph {
  GraphLayout layout;
  std::vector<std::vector<Node<Scalar>>> layers;
  /// permutation[pos] is the original feature placed at position pos.
  Permutation permutation;

  Index node_count() const { return layout.node_count(); }
  Index num_layers() const { return layout.num_layers(); }

  Node<Scalar>& node(Index layer, Index position) {
    return layers[static_cast<std::size_t>(layer)][static_cast<std::size_t>(position)];
  }
  const Node<Scalar>& node(Index layer, Index position) const {
    return layers[static_cast<std::size_t>(layer)][static_cast<std::size_t>(position)];
  }

  /// Dense id: layers in order, positions ascending.
  Index node_id(Index layer, Index position) const {
    Index id = position;
    for (Index l = 0; l < layer; ++l) id += layout.layer_sizes[static_cast<std::size_t>(l)];
    return id;
  }

  const Node<Scalar>& root() const { return layers.back().front(); }

  Index retrained_count() const {
    Index n = 0;
    for (const auto& layer : layers)
      for (const auto& nd : layer) n += nd.retrained ? 1 : 0;
    return n;
  }
};

/// Graph whose upper layers are identities (w = 1, b = 0) and whose leaves
/// carry zero models.
template <typename Scalar>
FeatureGraph<Scalar> make_graph(const GraphLayout& layout, const Permutation& perm) {
  if (static_cast<Index>(perm.size()) != layout.num_features || !is_permutation_of_iota(perm))
    throw ConfigError("permutation must be a bijection on 0.." +
                      std::to_string(layout.num_features - 1));
  FeatureGraph<Scalar> g;
  g.layout = layout;
  g.permutation = perm;
  g.layers.resize(layout.layer_sizes.size());
  for (Index l = 0; l < layout.num_layers(); ++l) {
    auto& layer = g.layers[static_cast<std::size_t>(l)];
    layer.resize(static_cast<std::size_t>(layout.layer_sizes[static_cast<std::size_t>(l)]));
    for (Index p = 0; p < static_cast<Index>(layer.size()); ++p) {
      Node<Scalar>& nd = layer[static_cast<std::size_t>(p)];
      nd.layer = l;
      nd.position = p;
      if (l == 0) {
        for (Index pos : layout.leaf_groups[static_cast<std::size_t>(p)])
          nd.inputs.push_back(perm[static_cast<std::size_t>(pos)]);
        nd.model.weights = Vector<Scalar>::Zero(static_cast<Index>(nd.inputs.size()));
      } else {
        const auto [first, count] = layout.child_range(l, p);
        for (Index c = 0; c < count; ++c) nd.inputs.push_back(first + c);
        nd.model.weights = Vector<Scalar>::Ones(count);
      }
      nd.model.bias = Scalar(0);
    }
  }
  return g;
}

/// Leaves take the SVM weights of their features and an equal share
/// svm.bias / M_1 of the bias; higher layers are identities. The graph then
/// computes exactly the SVM's affine function.
template <typename Scalar>
FeatureGraph<Scalar> init_from_svm(const GraphLayout& layout, const LinearModel<Scalar>& svm,
                                   const Permutation& perm) {
  if (svm.dim() != layout.num_features)
    throw DataError("SVM has " + std::to_string(svm.dim()) + " weights but the layout has " +
                    std::to_string(layout.num_features) + " features");
  FeatureGraph<Scalar> g = make_graph<Scalar>(layout, perm);
  const Scalar leaf_bias = svm.bias / Scalar(layout.layer_sizes.front());
  for (auto& leaf : g.layers.front()) {
    for (std::size_t k = 0; k < leaf.inputs.size(); ++k)
      leaf.model.weights(static_cast<Index>(k)) = svm.weights(leaf.inputs[k]);
    leaf.model.bias = leaf_bias;
  }
  return g;
}

/// Gathers the columns of X a leaf reads.
template <typename Scalar, typename Derived>
Matrix<Scalar> leaf_inputs(const Node<Scalar>& leaf, const Eigen::MatrixBase<Derived>& X) {
  return X(Eigen::all, leaf.inputs).template cast<Scalar>();
}

/// Row-wise w . in + b. Accumulates column by column so every caller gets
/// bit-identical values for the same inputs.
template <typename Scalar, typename Derived>
Vector<Scalar> node_response(const LinearModel<Scalar>& model, const Eigen::MatrixBase<Derived>& in) {
  Vector<Scalar> out = Vector<Scalar>::Zero(in.rows());
  for (Index k = 0; k < in.cols(); ++k) out += model.weights(k) * in.col(k);
  out.array() += model.bias;
  return out;
}

/// Layer-by-layer outputs on every row of X: element l is (rows x M_l).
template <typename Scalar, typename Derived>
std::vector<Matrix<Scalar>> forward(const FeatureGraph<Scalar>& g, const Eigen::MatrixBase<Derived>& X) {
  if (X.cols() != g.layout.num_features)
    throw DataError("graph expects " + std::to_string(g.layout.num_features) + " features, got " +
                    std::to_string(X.cols()));
  std::vector<Matrix<Scalar>> out(g.layers.size());
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    out[l].resize(X.rows(), static_cast<Index>(g.layers[l].size()));
    for (std::size_t p = 0; p < g.layers[l].size(); ++p) {
      const Node<Scalar>& nd = g.layers[l][p];
      if (l == 0) {
        out[l].col(static_cast<Index>(p)) = node_response(nd.model, leaf_inputs(nd, X));
      } else {
        const auto [first, count] = g.layout.child_range(static_cast<Index>(l), static_cast<Index>(p));
        out[l].col(static_cast<Index>(p)) = node_response(nd.model, out[l - 1].middleCols(first, count));
      }
    }
  }
  return out;
}

template <typename Scalar, typename Derived>
Vector<Scalar> evaluate_rows(const FeatureGraph<Scalar>& g, const Eigen::MatrixBase<Derived>& X) {
  return forward(g, X).back().col(0);
}

template <typename Scalar, typename Derived>
Scalar evaluate(const FeatureGraph<Scalar>& g, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != g.layout.num_features)
    throw DataError("graph expects " + std::to_string(g.layout.num_features) + " features, got " +
                    std::to_string(x.size()));
  const Matrix<Scalar> row = x.derived().template cast<Scalar>().transpose();
  return evaluate_rows(g, row)(0);
}

/// Product of edge weights from each node up to the root; element [l][p].
template <typename Scalar>
std::vector<std::vector<Scalar>> path_weights(const FeatureGraph<Scalar>& g) {
  std::vector<std::vector<Scalar>> coef(g.layers.size());
  for (std::size_t l = 0; l < g.layers.size(); ++l) coef[l].assign(g.layers[l].size(), Scalar(0));
  coef.back()[0] = Scalar(1);
  for (std::size_t l = g.layers.size() - 1; l >= 1; --l) {
    for (std::size_t p = 0; p < g.layers[l].size(); ++p) {
      const Node<Scalar>& nd = g.layers[l][p];
      for (std::size_t k = 0; k < nd.inputs.size(); ++k)
        coef[l - 1][static_cast<std::size_t>(nd.inputs[k])] = coef[l][p] * nd.model.weights(static_cast<Index>(k));
    }
  }
  return coef;
}

/// Composes every node's affine map into one model over the original
/// (unpermuted) feature order.
template <typename Scalar>
LinearModel<Scalar> flatten(const FeatureGraph<Scalar>& g) {
  const auto coef = path_weights(g);
  LinearModel<Scalar> flat;
  flat.weights = Vector<Scalar>::Zero(g.layout.num_features);
  flat.bias = Scalar(0);
  for (std::size_t l = 0; l < g.layers.size(); ++l)
    for (std::size_t p = 0; p < g.layers[l].size(); ++p) flat.bias += coef[l][p] * g.layers[l][p].model.bias;
  for (std::size_t p = 0; p < g.layers.front().size(); ++p) {
    const Node<Scalar>& leaf = g.layers.front()[p];
    for (std::size_t k = 0; k < leaf.inputs.size(); ++k)
      flat.weights(leaf.inputs[k]) += coef.front()[p] * leaf.model.weights(static_cast<Index>(k));
  }
  return flat;
}

/// Mean output of every node over the rows of X; element [l][p].
template <typename Scalar, typename Derived>
std::vector<std::vector<Scalar>> node_output_means(const FeatureGraph<Scalar>& g,
                                                   const Eigen::MatrixBase<Derived>& X) {
  const auto outputs = forward(g, X);
  std::vector<std::vector<Scalar>> means(outputs.size());
  for (std::size_t l = 0; l < outputs.size(); ++l)
    for (Index p = 0; p < outputs[l].cols(); ++p) means[l].push_back(outputs[l].col(p).mean());
  return means;
}

}  // namespace fga

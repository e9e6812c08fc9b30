// k-nearest-neighbour likelihood model. Used by the evaluation protocol and
// by the classifier-based unique-relevance estimator.
#pragma once

#include <numeric>

#include "fsur/common.hpp"
#include "fsur/dataset.hpp"

namespace fsur {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data).subspan(r * cols, cols); }
};

// Feature rows of `d` restricted to `features` (all features when empty).
inline Matrix feature_rows(const Dataset& d, const FeatureSubset& features = {}) {
  const FeatureSubset f = features.empty() ? FeatureSubset::all(d.n_features()) : features;
  f.validate(d.n_features());
  Matrix m(d.n_rows(), f.size());
  for (std::size_t c = 0; c < f.size(); ++c) {
    auto col = d.column(f[c]);
    for (std::size_t r = 0; r < d.n_rows(); ++r) m(r, c) = col[r];
  }
  return m;
}

// Per-query neighbour ordering under Euclidean distance on z-scored
// continuous columns; statistics come from the training rows only.
// Distance ties are broken by the lower training-row index.
class NeighbourIndex {
 public:
  NeighbourIndex(const Matrix& train, std::span<const FeatureKind> kinds) : train_(train) {
    if (kinds.size() != train.cols) throw Error("kinds do not match training columns");
    scale_.assign(train.cols, 1.0);
    for (std::size_t c = 0; c < train.cols; ++c) {
      if (kinds[c] != FeatureKind::Continuous) continue;
      std::vector<double> col(train.rows);
      for (std::size_t r = 0; r < train.rows; ++r) col[r] = train(r, c);
      const double mu = mean_of(col);
      for (auto& v : col) v = (v - mu) * (v - mu);
      const double sd = std::sqrt(mean_of(col));
      scale_[c] = sd > 0.0 ? sd : 1.0;
    }
  }

  // Indices of the `k` nearest training rows to `query`, nearest first.
  std::vector<std::size_t> nearest(std::span<const double> query, std::size_t k) const {
    if (query.size() != train_.cols) throw Error("query dimensionality does not match training data");
    k = std::min(k, train_.rows);
    std::vector<std::pair<double, std::size_t>> d(train_.rows);
    for (std::size_t r = 0; r < train_.rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < train_.cols; ++c) {
        const double diff = (query[c] - train_(r, c)) / scale_[c];
        s += diff * diff;
      }
      d[r] = {s, r};
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
    return out;
  }

 private:
  const Matrix& train_;
  std::vector<double> scale_;
};

// (votes_y + smoothing) / (k + smoothing * C) from the first k neighbours.
inline std::vector<double> vote_probabilities(std::span<const std::size_t> neighbours, std::size_t k,
                                              std::span<const int> train_labels, std::size_t n_classes,
                                              double smoothing) {
  std::vector<double> votes(n_classes, 0.0);
  for (std::size_t i = 0; i < k; ++i) votes[static_cast<std::size_t>(train_labels[neighbours[i]])] += 1.0;
  const double denom = static_cast<double>(k) + smoothing * static_cast<double>(n_classes);
  for (auto& v : votes) v = (v + smoothing) / denom;
  return votes;
}

// Most probable class; ties go to the lowest class index.
inline int argmax_class(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;
  return static_cast<int>(best);
}

// Class-probability matrix (queries x classes) for the KNN likelihood model.
inline Matrix knn_predict_proba(const Dataset& train, const Matrix& query_rows, std::size_t k,
                                double smoothing, const FeatureSubset& features = {}) {
  const Matrix tr = feature_rows(train, features);
  if (query_rows.cols != tr.cols) throw Error("query dimensionality does not match training data");
  if (k < 1 || k >= train.n_rows()) throw Error("knn: k must be in [1, N_train)");
  if (smoothing < 0.0) throw Error("knn: smoothing must be non-negative");
  std::vector<FeatureKind> kinds;
  const FeatureSubset f = features.empty() ? FeatureSubset::all(train.n_features()) : features;
  for (auto j : f) kinds.push_back(train.kind(j));
  NeighbourIndex index(tr, kinds);
  Matrix out(query_rows.rows, train.n_classes());
  for (std::size_t q = 0; q < query_rows.rows; ++q) {
    auto nn = index.nearest(query_rows.row(q), k);
    auto p = vote_probabilities(nn, k, train.labels(), train.n_classes(), smoothing);
    for (std::size_t c = 0; c < p.size(); ++c) out(q, c) = p[c];
  }
  return out;
}

}  // namespace fsur

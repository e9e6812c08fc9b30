// Unique relevance (information-theoretic and classifier-based), conditional
// relevance and irrelevance of individual features.
#pragma once

#include "fsur/knn.hpp"
#include "fsur/mi.hpp"

namespace fsur {

enum class UrEstimator { KSG, CLF };

inline const char* to_string(UrEstimator e) { return e == UrEstimator::KSG ? "ksg" : "clf"; }

struct RelevanceProfile {
  std::vector<double> ur_raw;
  std::vector<double> ur_norm;
  std::vector<double> marginal_mi;
  std::vector<double> irrelevance;
  UrEstimator ur_estimator = UrEstimator::KSG;
  std::uint64_t train_rows_hash = 0;

  std::size_t size() const { return ur_raw.size(); }
};

// Min-max scaling to [0, 1]; a constant input maps to 0.5 everywhere.
inline std::vector<double> min_max_normalize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.5);
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!(*hi > *lo)) return out;
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / span;
  return out;
}

// H(X) - I(X;Y). For a continuous feature the entropy term is differential,
// so values are not comparable with discrete features.
inline double irrelevance(MiEngine& engine, std::size_t x) {
  FeatureSubset one{x};
  one.validate(engine.data().n_features());
  return engine.entropy(x).value - engine.joint_mi(one).value;
}

inline double irrelevance(const Dataset& d, std::size_t x, const EstimatorConfig& cfg) {
  MiEngine engine(d, cfg);
  return irrelevance(engine, x);
}

// I(X;Y|W).
inline double cond_relevance(MiEngine& engine, std::size_t x, const FeatureSubset& w) {
  if (w.contains(x)) throw Error("cond_relevance: feature " + std::to_string(x) + " is in the conditioning set");
  return engine.cond_mi(FeatureSubset{x}, w);
}

inline double cond_relevance(const Dataset& d, std::size_t x, const FeatureSubset& w,
                             const EstimatorConfig& cfg) {
  MiEngine engine(d, cfg);
  return cond_relevance(engine, x, w);
}

// UR(X_k) = max(0, I(Omega;Y) - I(Omega \ X_k;Y)).
inline RelevanceProfile ur_ksg(MiEngine& engine) {
  const Dataset& d = engine.data();
  const std::size_t m = d.n_features();
  if (m < 2) throw Error("unique relevance needs at least two features");
  RelevanceProfile p;
  p.ur_estimator = UrEstimator::KSG;
  p.train_rows_hash = d.rows_hash();
  p.ur_raw.resize(m);
  p.marginal_mi.resize(m);
  p.irrelevance.resize(m);
  const auto all = FeatureSubset::all(m);
  const double full = engine.joint_mi(all).value;
  for (std::size_t k = 0; k < m; ++k) {
    try {
      p.ur_raw[k] = std::max(0.0, full - engine.joint_mi(all.without(k)).value);
      p.marginal_mi[k] = engine.joint_mi(FeatureSubset{k}).value;
      p.irrelevance[k] = irrelevance(engine, k);
    } catch (const Error& e) {
      throw Error("feature " + std::to_string(k) + " ('" + d.feature_name(k) + "'): " + e.what());
    }
  }
  p.ur_norm = min_max_normalize(p.ur_raw);
  return p;
}

inline RelevanceProfile ur_ksg(const Dataset& d, const EstimatorConfig& cfg) {
  MiEngine engine(d, cfg);
  return ur_ksg(engine);
}

struct ClfUrConfig {
  std::size_t folds = 5;
  std::size_t knn_k = 5;
  double smoothing = 1.0;
  std::uint64_t seed = 0;
};

// Stratified fold id per row: class members are shuffled, then dealt
// round-robin.
inline std::vector<std::size_t> stratified_folds(const Dataset& d, std::size_t folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(d.n_classes());
  for (std::size_t i = 0; i < d.n_rows(); ++i) by_class[static_cast<std::size_t>(d.labels()[i])].push_back(i);
  std::vector<std::size_t> fold(d.n_rows(), 0);
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    if (rows.size() < folds)
      throw Error("ur_clf: every class needs at least `folds` members");
    rng.shuffle(rows);
    for (std::size_t r = 0; r < rows.size(); ++r) fold[rows[r]] = (offset + r) % folds;
    offset += rows.size();
  }
  return fold;
}

// Classifier-based UR: the out-of-fold conditional cross-entropy
// -(1/N) sum_i ln p(y_i | Omega_i \ x_k) under a KNN likelihood model.
inline RelevanceProfile ur_clf(const Dataset& d, const ClfUrConfig& cfg, const EstimatorConfig& est = {}) {
  const std::size_t m = d.n_features();
  if (m < 2) throw Error("unique relevance needs at least two features");
  if (cfg.folds < 2) throw Error("ur_clf: folds must be at least 2");
  if (cfg.knn_k < 1) throw Error("ur_clf: knn_k must be at least 1");
  const auto fold = stratified_folds(d, cfg.folds, cfg.seed);

  struct FoldRows {
    std::vector<std::size_t> train, test;
  };
  std::vector<FoldRows> parts(cfg.folds);
  for (std::size_t i = 0; i < d.n_rows(); ++i) parts[fold[i]].test.push_back(i);
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    for (std::size_t i = 0; i < d.n_rows(); ++i)
      if (fold[i] != f) parts[f].train.push_back(i);
    std::set<int> classes;
    for (auto r : parts[f].train) classes.insert(d.labels()[r]);
    if (classes.size() < 2) throw Error("ur_clf: fold " + std::to_string(f) + " trains on a single class");
    if (cfg.knn_k >= parts[f].train.size())
      throw Error("ur_clf: knn_k must be smaller than the training-fold size");
  }

  RelevanceProfile p;
  p.ur_estimator = UrEstimator::CLF;
  p.train_rows_hash = d.rows_hash();
  p.ur_raw.resize(m);
  p.marginal_mi.resize(m);
  p.irrelevance.assign(m, 0.0);

  parallel_for(m, est.threads, [&](std::size_t k) {
    const auto keep = FeatureSubset::all(m).without(k);
    std::vector<double> loglik(d.n_rows(), 0.0);
    for (std::size_t f = 0; f < cfg.folds; ++f) {
      const Dataset train = d.select_rows(parts[f].train);
      const Matrix tr = feature_rows(train, keep);
      std::vector<FeatureKind> kinds;
      for (auto j : keep) kinds.push_back(d.kind(j));
      NeighbourIndex index(tr, kinds);
      std::vector<double> q(keep.size());
      for (auto r : parts[f].test) {
        for (std::size_t c = 0; c < keep.size(); ++c) q[c] = d.at(r, keep[c]);
        auto nn = index.nearest(q, cfg.knn_k);
        auto probs = vote_probabilities(nn, cfg.knn_k, train.labels(), d.n_classes(), cfg.smoothing);
        const double py = probs[static_cast<std::size_t>(d.labels()[r])];
        if (!(py > 0.0))
          throw Error("ur_clf: zero likelihood for row " + std::to_string(r) + "; use smoothing > 0");
        loglik[r] = std::log(py);
      }
    }
    p.ur_raw[k] = -mean_of(loglik);
  });

  // Marginal relevance still comes from the information-theoretic estimator.
  MiEngine engine(d, est);
  for (std::size_t k = 0; k < m; ++k) {
    p.marginal_mi[k] = engine.joint_mi(FeatureSubset{k}).value;
    p.irrelevance[k] = irrelevance(engine, k);
  }
  p.ur_norm = min_max_normalize(p.ur_raw);
  return p;
}

inline RelevanceProfile ur_clf(const Dataset& d, std::size_t folds, std::size_t knn_k, double smoothing,
                               std::uint64_t seed) {
  return ur_clf(d, ClfUrConfig{folds, knn_k, smoothing, seed});
}

}  // namespace fsur

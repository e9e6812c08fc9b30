// Multi-run evaluation protocol: stratified split, selection on train,
// validation-curve choice of the feature count and KNN neighbourhood, and
// test accuracy of the retrained classifier.
#pragma once

#include "fsur/knn.hpp"
#include "fsur/selection.hpp"

namespace fsur {

inline std::vector<std::size_t> default_knn_grid() {
  std::vector<std::size_t> g;
  for (std::size_t k = 3; k <= 50; k += 2) g.push_back(k);
  return g;
}

struct EvalConfig {
  std::size_t runs = 20;
  SplitSpec split;
  std::size_t k_budget = 0;  // 0 sweeps every feature
  std::vector<std::size_t> knn_grid = default_knn_grid();
  ScoreConfig score_config;
  std::uint64_t master_seed = 0;

  void validate(std::size_t m) const {
    if (runs < 1) throw Error("runs must be at least 1");
    if (knn_grid.empty()) throw Error("knn_grid must not be empty");
    for (auto k : knn_grid)
      if (k < 1) throw Error("knn_grid values must be at least 1");
    if (k_budget > m) throw Error("k_budget exceeds the number of features");
    split.validate();
    ScoreConfig sc = score_config;
    sc.budget = 0;
    sc.validate(m);
  }
};

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::size_t chosen_n = 0;
  std::size_t knn_k = 0;
  std::vector<double> val_curve;           // percent, one entry per n
  std::vector<std::size_t> val_best_knn;  // grid winner per n
  double test_acc = 0.0;                   // percent
  FeatureSubset order;
  std::uint64_t train_rows_hash = 0;
  bool leakage_ok = false;
};

struct EvalReport {
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation; 0 for one run
  double mean_n_features = 0.0;
  std::vector<RunResult> per_run;
  EvalConfig config;
};

struct ValidationCurve {
  std::vector<double> accuracy;       // percent
  std::vector<std::size_t> best_knn;  // per n
};

// Percent of rows of `query` (restricted to `features`) classified correctly
// by a KNN trained on `train`.
inline double knn_accuracy(const Dataset& train, const Dataset& query, const FeatureSubset& features,
                           std::size_t k) {
  const Matrix q = feature_rows(query, features);
  const Matrix p = knn_predict_proba(train, q, k, 0.0, features);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < q.rows; ++r) {
    std::vector<double> row(p.cols);
    for (std::size_t c = 0; c < p.cols; ++c) row[c] = p(r, c);
    if (argmax_class(row) == query.labels()[r]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(q.rows);
}

// For n = 1..k_budget, best validation accuracy over the grid using the first
// n selected features; grid ties go to the smaller neighbour count.
inline ValidationCurve validation_curve(const Dataset& train, const Dataset& val, const FeatureSubset& order,
                                        std::size_t k_budget, std::span<const std::size_t> knn_grid) {
  if (k_budget < 1 || k_budget > order.size()) throw Error("k_budget must lie in [1, |order|]");
  if (knn_grid.empty()) throw Error("knn_grid must not be empty");
  for (auto k : knn_grid)
    if (k >= train.n_rows())
      throw Error("knn_grid value " + std::to_string(k) + " is not below the training size " +
                  std::to_string(train.n_rows()));
  std::vector<std::size_t> grid(knn_grid.begin(), knn_grid.end());
  std::sort(grid.begin(), grid.end());
  ValidationCurve vc;
  std::vector<std::size_t> correct(grid.size());
  for (std::size_t n = 1; n <= k_budget; ++n) {
    const FeatureSubset prefix(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n)));
    const Matrix tr = feature_rows(train, prefix);
    const Matrix q = feature_rows(val, prefix);
    std::vector<FeatureKind> kinds;
    for (auto j : prefix) kinds.push_back(train.kind(j));
    const NeighbourIndex index(tr, kinds);
    // One neighbour list per query at the largest k; each grid value uses its prefix.
    std::fill(correct.begin(), correct.end(), 0);
    for (std::size_t r = 0; r < q.rows; ++r) {
      const auto nn = index.nearest(q.row(r), grid.back());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto p = vote_probabilities(nn, grid[g], train.labels(), train.n_classes(), 0.0);
        if (argmax_class(p) == val.labels()[r]) ++correct[g];
      }
    }
    double best = -1.0;
    std::size_t best_k = grid.front();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double acc = 100.0 * static_cast<double>(correct[g]) / static_cast<double>(q.rows);
      if (acc > best) {
        best = acc;
        best_k = grid[g];
      }
    }
    vc.accuracy.push_back(best);
    vc.best_knn.push_back(best_k);
  }
  return vc;
}

inline ValidationCurve validation_curve(const Dataset& train, const Dataset& val, const SelectionTrace& trace,
                                        std::size_t k_budget, std::span<const std::size_t> knn_grid) {
  return validation_curve(train, val, trace.order(), k_budget, knn_grid);
}

// 1-based n of the maximum; ties go to the smallest n.
inline std::size_t choose_n(std::span<const double> curve) {
  if (curve.empty()) throw Error("empty validation curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i] > curve[best]) best = i;
  return best + 1;
}

inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mu) * (v[i] - mu);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

// Train rows are disjoint from validation/test rows and every estimate that
// fed selection was computed on exactly the train rows.
inline bool leakage_free(const DatasetSplit& s, const SelectionTrace& trace) {
  std::set<std::size_t> train(s.train.row_ids().begin(), s.train.row_ids().end());
  for (const Dataset* other : {&s.val, &s.test})
    for (auto r : other->row_ids())
      if (train.contains(r)) return false;
  std::set<std::size_t> val(s.val.row_ids().begin(), s.val.row_ids().end());
  for (auto r : s.test.row_ids())
    if (val.contains(r)) return false;
  const auto h = s.train.rows_hash();
  if (trace.train_rows_hash != h) return false;
  if (trace.ur_profile && trace.ur_profile->train_rows_hash != h) return false;
  return true;
}

inline RunResult run_once(const Dataset& d, const EvalConfig& cfg, std::size_t run, MiCache* cache = nullptr) {
  RunResult rr;
  rr.run = run;
  rr.seed = derive_seed(cfg.master_seed, run);
  try {
    SplitSpec spec = cfg.split;
    spec.seed = rr.seed;
    const DatasetSplit split = split_dataset(d, spec);

    ScoreConfig sc = cfg.score_config;
    sc.estimator.jitter_seed = rr.seed;
    sc.clf.seed = rr.seed;
    const std::size_t budget = cfg.k_budget == 0 ? d.n_features() : cfg.k_budget;
    sc.budget = budget;
    MiEngine engine(split.train, sc.estimator, cache);
    const SelectionTrace trace = select_with_ur(engine, sc);

    // The test split is first read here, after every selection decision.
    rr.leakage_ok = leakage_free(split, trace);
    if (!rr.leakage_ok) throw Error("leakage check failed");

    const auto vc = validation_curve(split.train, split.val, trace, budget, cfg.knn_grid);
    rr.val_curve = vc.accuracy;
    rr.val_best_knn = vc.best_knn;
    rr.chosen_n = choose_n(vc.accuracy);
    rr.knn_k = vc.best_knn[rr.chosen_n - 1];
    rr.order = trace.order();
    rr.train_rows_hash = trace.train_rows_hash;
    const FeatureSubset chosen(
        std::vector<std::size_t>(rr.order.begin(), rr.order.begin() + static_cast<std::ptrdiff_t>(rr.chosen_n)));
    rr.test_acc = knn_accuracy(split.train, split.test, chosen, rr.knn_k);
  } catch (const Error& e) {
    throw Error("run " + std::to_string(run) + " (seed " + std::to_string(rr.seed) + "): " + e.what());
  }
  return rr;
}

inline EvalReport summarize(std::vector<RunResult> runs, const EvalConfig& cfg) {
  std::sort(runs.begin(), runs.end(), [](const RunResult& a, const RunResult& b) { return a.run < b.run; });
  EvalReport rep;
  rep.config = cfg;
  std::vector<double> acc, nf;
  for (const auto& r : runs) {
    acc.push_back(r.test_acc);
    nf.push_back(static_cast<double>(r.chosen_n));
  }
  rep.mean_acc = mean_of(acc);
  rep.std_acc = sample_std(acc);
  rep.mean_n_features = mean_of(nf);
  rep.per_run = std::move(runs);
  return rep;
}

inline EvalReport run_protocol(const Dataset& d, const EvalConfig& cfg, MiCache* cache = nullptr) {
  cfg.validate(d.n_features());
  // Pairwise terms recur at every greedy step; memoize them even without a
  // caller-supplied cache. Keys carry the train-rows hash, so runs never collide.
  MiCache local;
  if (!cache) cache = &local;
  std::vector<RunResult> runs;
  runs.reserve(cfg.runs);
  for (std::size_t r = 0; r < cfg.runs; ++r) runs.push_back(run_once(d, cfg, r, cache));
  return summarize(std::move(runs), cfg);
}

}  // namespace fsur

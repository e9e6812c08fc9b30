#include <gtest/gtest.h>

#include "fsur/evaluation.hpp"
#include "test_helpers.hpp"

using namespace fsur;

namespace {

Dataset tiny_1d(std::vector<double> x, std::vector<int> y) {
  Dataset::Parts p;
  p.name = "tiny";
  p.n_rows = x.size();
  p.names = {"x"};
  p.kinds = {FeatureKind::Continuous};
  p.values = std::move(x);
  p.labels = std::move(y);
  return Dataset(std::move(p));
}

}  // namespace

TEST(Knn, PredictProbaExample) {
  Dataset tr = tiny_1d({0.0, 1.0, 2.0, 10.0, 11.0}, {0, 0, 1, 1, 1});
  Matrix q(1, 1);
  q(0, 0) = 0.4;
  auto p = knn_predict_proba(tr, q, 3, 0.0);
  EXPECT_NEAR(p(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p(0, 1), 1.0 / 3.0, 1e-15);
  auto ps = knn_predict_proba(tr, q, 3, 1.0);
  EXPECT_NEAR(ps(0, 0), 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(ps(0, 1), 2.0 / 5.0, 1e-15);
}

TEST(Knn, ContractExamples) {
  Dataset tr = tiny_1d({0.0, 2.0, 7.0, 9.0}, {0, 1, 0, 1});
  Matrix q(1, 1);
  q(0, 0) = 7.0;
  EXPECT_EQ(knn_predict_proba(tr, q, 1, 0.0)(0, 0), 1.0);
  q(0, 0) = 1.0;
  auto p = knn_predict_proba(tr, q, 2, 0.0);
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(0, 1), 0.5);
  Dataset three = tiny_1d({0.0, 0.1, 0.2, 5.0, 6.0}, {0, 0, 0, 1, 1});
  q(0, 0) = 0.1;
  auto s = knn_predict_proba(three, q, 3, 1.0);
  EXPECT_NEAR(s(0, 0), 4.0 / 5.0, 1e-15);
  EXPECT_NEAR(s(0, 1), 1.0 / 5.0, 1e-15);
}

TEST(Knn, RowsSumToOne) {
  Dataset s = load_csv(testing_util::sonar_path(), "class");
  const Matrix q = feature_rows(s);
  for (double sm : {0.0, 0.5, 1.0})
    for (std::size_t k : {1u, 5u, 17u}) {
      auto p = knn_predict_proba(s, q, k, sm);
      for (std::size_t r = 0; r < p.rows; ++r) {
        double t = 0.0;
        for (std::size_t c = 0; c < p.cols; ++c) {
          EXPECT_GE(p(r, c), 0.0);
          t += p(r, c);
        }
        EXPECT_NEAR(t, 1.0, 1e-12);
      }
    }
}

TEST(Knn, TrainAccuracyWithOneNeighbour) {
  Dataset s = load_csv(testing_util::sonar_path(), "class");
  EXPECT_EQ(knn_accuracy(s, s, FeatureSubset::all(s.n_features()), 1), 100.0);
}

TEST(Knn, Errors) {
  Dataset tr = tiny_1d({0.0, 1.0, 2.0}, {0, 1, 0});
  Matrix q(1, 1);
  EXPECT_THROW(knn_predict_proba(tr, q, 3, 0.0), Error);
  EXPECT_THROW(knn_predict_proba(tr, q, 0, 0.0), Error);
  EXPECT_THROW(knn_predict_proba(tr, q, 1, -1.0), Error);
  Matrix q2(1, 2);
  EXPECT_THROW(knn_predict_proba(tr, q2, 1, 0.0), Error);
}

TEST(Knn, DistanceTiesGoToLowerRow) {
  Dataset tr = tiny_1d({-1.0, 1.0, 5.0}, {1, 0, 0});
  Matrix q(1, 1);
  auto p = knn_predict_proba(tr, q, 1, 0.0);
  EXPECT_EQ(p(0, 1), 1.0);
}

TEST(ValidationCurve, XorNeedsBothFeatures) {
  Dataset tr = synth_xor(0, 25, 1);
  Dataset va = synth_xor(0, 25, 2);
  std::vector<std::size_t> grid{3, 5, 7};
  auto vc = validation_curve(tr, va, FeatureSubset{0, 1}, 2, grid);
  ASSERT_EQ(vc.accuracy.size(), 2u);
  EXPECT_NEAR(vc.accuracy[0], 50.0, 15.0);
  EXPECT_EQ(vc.accuracy[1], 100.0);
  EXPECT_EQ(choose_n(vc.accuracy), 2u);
  auto one = validation_curve(tr, va, FeatureSubset{0, 1}, 1, grid);
  EXPECT_EQ(one.accuracy.size(), 1u);
}

TEST(ValidationCurve, XorWithNoiseTrace) {
  // Plain GSA ties at step 1 (every feature has near-zero marginal MI), so the
  // boosted trace is used to put both XOR inputs first.
  Dataset d = synth_xor(3, 50, 7);
  auto sp = split_dataset(d, SplitSpec{});
  MiEngine e(sp.train, {});
  ScoreConfig c;
  c.method = Method::GSA;
  c.beta = 0.1;
  c.ur_source = UrSource::KSG;
  auto t = select_with_ur(e, c);
  ASSERT_EQ((FeatureSubset{t.order()[0], t.order()[1]}).sorted(), (std::vector<std::size_t>{0, 1}));
  const auto grid = default_knn_grid();
  std::vector<std::size_t> small(grid.begin(), grid.begin() + 10);
  auto vc = validation_curve(sp.train, sp.val, t, 2, small);
  EXPECT_NEAR(vc.accuracy[0], 50.0, 15.0);
  EXPECT_EQ(vc.accuracy[1], 100.0);
}

TEST(ValidationCurve, DuplicateIsFlat) {
  Dataset tr = synth_duplicate(2, 40, 3);
  Dataset va = synth_duplicate(2, 40, 4);
  std::vector<std::size_t> grid{3};
  auto vc = validation_curve(tr, va, FeatureSubset{0, 1}, 2, grid);
  EXPECT_EQ(vc.accuracy[0], vc.accuracy[1]);
  EXPECT_EQ(choose_n(vc.accuracy), 1u);
}

TEST(ValidationCurve, MatchesPerNeighbourLoop) {
  Dataset s = load_csv(testing_util::sonar_path(), "class");
  auto sp = split_dataset(s, SplitSpec{});
  FeatureSubset order{10, 3, 47, 20, 0, 35};
  const auto grid = default_knn_grid();
  auto vc = validation_curve(sp.train, sp.val, order, order.size(), grid);
  for (std::size_t n = 1; n <= order.size(); ++n) {
    FeatureSubset prefix(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n)));
    double best = -1.0;
    std::size_t bk = 0;
    for (auto k : grid) {
      const double a = knn_accuracy(sp.train, sp.val, prefix, k);
      if (a > best) best = a, bk = k;
    }
    EXPECT_EQ(vc.accuracy[n - 1], best);
    EXPECT_EQ(vc.best_knn[n - 1], bk);
  }
}

TEST(ValidationCurve, Errors) {
  Dataset tr = synth_xor(0, 2, 1);
  std::vector<std::size_t> grid{9};
  EXPECT_THROW(validation_curve(tr, tr, FeatureSubset{0, 1}, 2, grid), Error);
  std::vector<std::size_t> ok{3};
  EXPECT_THROW(validation_curve(tr, tr, FeatureSubset{0, 1}, 3, ok), Error);
  EXPECT_THROW(validation_curve(tr, tr, FeatureSubset{0, 1}, 0, ok), Error);
}

TEST(ChooseN, TiesGoToSmallest) {
  std::vector<double> flat{80.0, 80.0, 80.0};
  EXPECT_EQ(choose_n(flat), 1u);
  std::vector<double> c{70.0, 85.0, 85.0, 60.0};
  EXPECT_EQ(choose_n(c), 2u);
  EXPECT_THROW(choose_n(std::vector<double>{}), Error);
}

TEST(SampleStd, Examples) {
  EXPECT_EQ(sample_std(std::vector<double>{3.0}), 0.0);
  EXPECT_NEAR(sample_std(std::vector<double>{1.0, 2.0, 3.0, 4.0}), std::sqrt(5.0 / 3.0), 1e-15);
}

namespace {

EvalConfig small_config(Method m, double beta, UrSource src) {
  EvalConfig c;
  c.runs = 3;
  c.k_budget = 6;
  c.knn_grid = {3, 5, 7};
  c.score_config.method = m;
  c.score_config.beta = beta;
  c.score_config.ur_source = src;
  c.master_seed = 11;
  return c;
}

Dataset sonar_slice() {
  return load_csv(testing_util::sonar_path(), "class")
      .select_features(FeatureSubset{0, 3, 8, 10, 11, 20, 35, 44, 47, 50});
}

}  // namespace

TEST(Protocol, DeterministicAndLeakFree) {
  Dataset s = sonar_slice();
  for (auto src : {UrSource::None, UrSource::KSG, UrSource::CLF}) {
    auto cfg = small_config(Method::GSA, src == UrSource::None ? 0.0 : 0.1, src);
    auto a = run_protocol(s, cfg);
    auto b = run_protocol(s, cfg);
    ASSERT_EQ(a.per_run.size(), 3u);
    EXPECT_EQ(a.mean_acc, b.mean_acc);
    EXPECT_EQ(a.std_acc, b.std_acc);
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_TRUE(a.per_run[r].leakage_ok);
      EXPECT_EQ(a.per_run[r].order, b.per_run[r].order);
      EXPECT_EQ(a.per_run[r].val_curve, b.per_run[r].val_curve);
      EXPECT_EQ(a.per_run[r].seed, derive_seed(11, r));
      EXPECT_GE(a.per_run[r].chosen_n, 1u);
      EXPECT_LE(a.per_run[r].chosen_n, 6u);
    }
  }
}

TEST(Protocol, SummaryRecomputes) {
  Dataset s = sonar_slice();
  auto rep = run_protocol(s, small_config(Method::JMI, 0.0, UrSource::None));
  double m = 0.0, nf = 0.0;
  for (const auto& r : rep.per_run) m += r.test_acc, nf += static_cast<double>(r.chosen_n);
  m /= 3.0;
  nf /= 3.0;
  double v = 0.0;
  for (const auto& r : rep.per_run) v += (r.test_acc - m) * (r.test_acc - m);
  EXPECT_NEAR(rep.mean_acc, m, 1e-9);
  EXPECT_NEAR(rep.std_acc, std::sqrt(v / 2.0), 1e-9);
  EXPECT_NEAR(rep.mean_n_features, nf, 1e-9);
  for (const auto& r : rep.per_run) {
    EXPECT_GE(r.test_acc, 0.0);
    EXPECT_LE(r.test_acc, 100.0);
    EXPECT_EQ(r.knn_k, r.val_best_knn[r.chosen_n - 1]);
  }
}

TEST(Protocol, SelectionSeesTrainRowsOnly) {
  Dataset s = sonar_slice();
  auto cfg = small_config(Method::MRMR, 0.0, UrSource::None);
  cfg.runs = 1;
  auto rep = run_protocol(s, cfg);
  SplitSpec spec = cfg.split;
  spec.seed = derive_seed(11, 0);
  auto sp = split_dataset(s, spec);
  EXPECT_EQ(rep.per_run[0].train_rows_hash, sp.train.rows_hash());
  MiEngine e(sp.train, [] {
    EstimatorConfig c;
    c.jitter_seed = derive_seed(11, 0);
    return c;
  }());
  auto sc = cfg.score_config;
  sc.budget = 6;
  EXPECT_EQ(select(e, sc).order(), rep.per_run[0].order);
}

TEST(Protocol, LeakageDetection) {
  Dataset s = sonar_slice();
  auto sp = split_dataset(s, SplitSpec{});
  MiEngine e(sp.train, {});
  auto t = select(e, ScoreConfig::plain(Method::MIM, 2));
  EXPECT_TRUE(leakage_free(sp, t));
  auto bad = t;
  bad.train_rows_hash ^= 1;
  EXPECT_FALSE(leakage_free(sp, bad));
  auto overlap = sp;
  overlap.test = sp.train;
  EXPECT_FALSE(leakage_free(overlap, t));
}

TEST(Protocol, ConfigValidation) {
  Dataset s = sonar_slice();
  auto cfg = small_config(Method::GSA, 0.1, UrSource::None);
  EXPECT_THROW(run_protocol(s, cfg), Error);
  cfg = small_config(Method::GSA, 0.0, UrSource::None);
  cfg.runs = 0;
  EXPECT_THROW(run_protocol(s, cfg), Error);
  cfg.runs = 1;
  cfg.k_budget = 11;
  EXPECT_THROW(run_protocol(s, cfg), Error);
  cfg.k_budget = 2;
  cfg.knn_grid = {};
  EXPECT_THROW(run_protocol(s, cfg), Error);
}

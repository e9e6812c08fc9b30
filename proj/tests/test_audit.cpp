#include <gtest/gtest.h>

#include "fsur/audit.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace fsur;

namespace {
const double kLn2 = std::log(2.0);
}

TEST(Saturation, Examples) {
  std::vector<double> dup{kLn2, kLn2};
  EXPECT_EQ(detect_saturation(dup, kLn2, 1e-3), 1u);
  std::vector<double> x{0.0, kLn2};
  EXPECT_EQ(detect_saturation(x, kLn2, 1e-3), 2u);
  std::vector<double> flat{0.1, 0.5, 0.7, 0.7, 0.7};
  EXPECT_EQ(detect_saturation(flat, 0.7, 0.0), 3u);
  std::vector<double> never{0.1, 0.2};
  EXPECT_THROW(detect_saturation(never, 0.7, 1e-3), Error);
}

TEST(Saturation, RelativeThreshold) {
  std::vector<double> c{0.5, 0.995, 0.9995};
  EXPECT_EQ(detect_saturation(c, 1.0, 1e-3), 3u);
  EXPECT_EQ(detect_saturation(c, 1.0, 1e-2), 2u);
}

TEST(Saturation, FromTraces) {
  Dataset du = synth_duplicate(2, 20, 0);
  MiEngine e(du, {});
  auto t = select(e, ScoreConfig::plain(Method::GSA));
  EXPECT_EQ(detect_saturation(t, e.joint_mi(FeatureSubset{0, 1}).value, 1e-3), 1u);
  Dataset x = synth_xor(0, 3, 0);
  MiEngine ex(x, {});
  auto tx = select(ex, ScoreConfig::plain(Method::GSA));
  EXPECT_EQ(detect_saturation(tx, kLn2, 1e-3), 2u);
}

TEST(PartitionUr, Examples) {
  auto px = ur_ksg(synth_xor(0, 1, 0), {});
  auto [ur, zur] = partition_ur(FeatureSubset{1, 0}, px, 1e-3);
  EXPECT_EQ(ur, (FeatureSubset{1, 0}));
  EXPECT_TRUE(zur.empty());
  auto pd = ur_ksg(synth_duplicate(2, 20, 0), {});
  std::tie(ur, zur) = partition_ur(FeatureSubset{0}, pd, 1e-3);
  EXPECT_TRUE(ur.empty());
  EXPECT_EQ(zur, (FeatureSubset{0}));
  std::tie(ur, zur) = partition_ur(FeatureSubset{0, 1}, px, 10.0);
  EXPECT_TRUE(ur.empty());
  EXPECT_EQ(zur, (FeatureSubset{0, 1}));
}

TEST(FindSred, DuplicatePairRemovesFirstInOrder) {
  Dataset du = synth_duplicate(2, 20, 0);
  MiEngine e(du, {});
  auto r = find_sred(e, FeatureSubset{}, FeatureSubset{0, 1}, 0.0);
  EXPECT_EQ(r.s_red, (FeatureSubset{0}));
  EXPECT_EQ(r.s_cr, (FeatureSubset{1}));
  // Size 2 ({X1, X2}) is tried first and fails, then {X1} succeeds.
  EXPECT_EQ(r.subsets_evaluated, 2u);
}

TEST(FindSred, EmptyZur) {
  Dataset x = synth_xor(0, 1, 0);
  MiEngine e(x, {});
  auto r = find_sred(e, FeatureSubset{0, 1}, FeatureSubset{}, 0.0);
  EXPECT_TRUE(r.s_red.empty());
  EXPECT_TRUE(r.s_cr.empty());
}

TEST(FindSred, InfeasibleIsLoud) {
  Dataset du = synth_duplicate(30, 20, 0);
  MiEngine e(du, {});
  try {
    find_sred(e, FeatureSubset{}, FeatureSubset::all(30), 0.0, 25);
    FAIL();
  } catch (const Error& err) {
    EXPECT_NE(std::string(err.what()).find("exhaustive search infeasible"), std::string::npos);
  }
  EXPECT_THROW(find_sred(e, FeatureSubset{0}, FeatureSubset{0, 1}, 0.0), Error);
}

TEST(FindSred, MatchesBruteForceOracle) {
  std::size_t nonempty = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Dataset d = oracle::structured_discrete(seed + 700, 3, 8, 64);
    const auto t = oracle::from_dataset(d);
    MiEngine e(d, {});
    auto p = ur_ksg(e);
    auto [ur, zur] = partition_ur(FeatureSubset::all(d.n_features()), p, 1e-12);
    auto r = find_sred(e, ur, zur, 0.0);
    auto expected = oracle::brute_sred(t, ur.indices(), zur.indices(), 1e-12);
    EXPECT_EQ(r.s_red.sorted(), expected) << seed;
    nonempty += !expected.empty();
  }
  EXPECT_GT(nonempty, 10u);
}

TEST(Audit, DuplicatePairGsa) {
  Dataset du = synth_duplicate(2, 20, 0);
  MiEngine e(du, {});
  auto r = audit(e, ScoreConfig::plain(Method::GSA));
  EXPECT_EQ(r.sat_step, 1u);
  EXPECT_EQ(r.s_sat, (FeatureSubset{0}));
  EXPECT_TRUE(r.s_ur.empty());
  EXPECT_TRUE(r.s_red.empty());
  EXPECT_EQ(r.s_cr, (FeatureSubset{0}));
  EXPECT_EQ(r.gamma, 0.0);
  EXPECT_EQ(r.tolerance_used, 0.0);
  EXPECT_NO_THROW(check_report(r));
}

TEST(Audit, DuplicatePairFullSatSetGivesHalf) {
  // s_sat = {X1, X2} by construction: half of it is removable.
  Dataset du = synth_duplicate(2, 20, 0);
  MiEngine e(du, {});
  auto p = ur_ksg(e);
  auto [ur, zur] = partition_ur(FeatureSubset{0, 1}, p, 1e-3);
  auto r = find_sred(e, ur, zur, 0.0);
  EXPECT_EQ(static_cast<double>(r.s_red.size()) / 2.0, 0.5);
}

TEST(Audit, XorAllUnique) {
  Dataset x = synth_xor(0, 5, 0);
  MiEngine e(x, {});
  auto r = audit(e, ScoreConfig::plain(Method::MIM));
  EXPECT_EQ(r.s_sat.size(), 2u);
  EXPECT_EQ(r.s_ur.size(), 2u);
  EXPECT_EQ(r.gamma, 0.0);
}

TEST(Audit, ReportInvariantsOnRandomDiscrete) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Dataset d = oracle::structured_discrete(seed + 1234, 3, 8, 64);
    for (auto m : kAllMethods) {
      MiEngine e(d, {});
      auto r = audit(e, ScoreConfig::plain(m));
      EXPECT_NO_THROW(check_report(r));
      EXPECT_GE(r.gamma, 0.0);
      EXPECT_LE(r.gamma, 1.0);
      const auto t = oracle::from_dataset(d);
      std::vector<std::size_t> kept;
      for (auto j : r.s_sat)
        if (!r.s_red.contains(j)) kept.push_back(j);
      EXPECT_GE(oracle::mi_label(t, kept), oracle::mi_label(t, r.s_sat.indices()) - 1e-12);
    }
  }
}

TEST(Audit, ToleranceValidation) {
  AuditTolerances t;
  t.rel_tol = -1;
  EXPECT_THROW(t.validate(), Error);
  t = AuditTolerances{};
  t.mi_tol = -0.1;
  EXPECT_THROW(t.validate(), Error);
}

TEST(Audit, KsgPathOnSonarSubset) {
  Dataset s = load_csv(testing_util::sonar_path(), "class").select_features(FeatureSubset{0, 8, 10, 11, 20, 35, 44, 47});
  MiEngine e(s, {});
  auto r = audit(e, ScoreConfig::plain(Method::GSA));
  EXPECT_EQ(r.tolerance_used, 1e-3);
  EXPECT_NO_THROW(check_report(r));
  // Matrix-path estimates agree with the engine's direct estimate for the kept set.
  FeatureSubset kept;
  for (auto j : r.s_sat)
    if (!r.s_red.contains(j)) kept.push_back(j);
  EXPECT_GE(e.joint_mi(kept).value, r.sat_mi - 1e-3 - 1e-12);
}

// Redundancy audit of a selection trace: saturation point, unique-relevance
// partition, exhaustive search for the largest removable subset, and the
// redundancy rate gamma = |S_red| / |S_sat|.
#pragma once

#include "fsur/selection.hpp"

namespace fsur {

// Absolute slack absorbing summation-order differences between plugin
// estimates of information-equivalent subsets.
inline constexpr double kNumericSlack = 1e-12;

struct AuditTolerances {
  double rel_tol = 1e-3;
  double ur_tol = 1e-3;
  std::optional<double> mi_tol;  // unset: 0 for plugin, 1e-3 otherwise
  std::size_t max_exhaustive = 25;

  void validate() const {
    if (!(rel_tol >= 0.0 && rel_tol < 1.0)) throw Error("rel_tol must lie in [0, 1)");
    if (!(ur_tol >= 0.0)) throw Error("ur_tol must be non-negative");
    if (mi_tol && !(*mi_tol >= 0.0)) throw Error("mi_tol must be non-negative");
  }
};

struct RedundancyReport {
  FeatureSubset s_sat, s_ur, s_zur, s_cr, s_red;
  double gamma = 0.0;
  std::size_t sat_step = 0;
  double tolerance_used = 0.0;  // mi_tol
  double rel_tol = 0.0;
  double ur_tol = 0.0;
  double full_mi = 0.0;
  double sat_mi = 0.0;      // I(S_sat;Y)
  double reduced_mi = 0.0;  // I(S_sat \ S_red;Y)
  std::uint64_t subsets_evaluated = 0;
  SelectionTrace trace;
  RelevanceProfile ur_profile;  // KSG profile used for the partition
};

// Smallest 1-based step whose joint MI reaches full_mi - rel_tol * |full_mi|.
inline std::size_t detect_saturation(std::span<const double> curve, double full_mi, double rel_tol) {
  if (!(rel_tol >= 0.0)) throw Error("rel_tol must be non-negative");
  const double threshold = full_mi - rel_tol * std::abs(full_mi) - kNumericSlack;
  for (std::size_t t = 0; t < curve.size(); ++t)
    if (curve[t] >= threshold) return t + 1;
  throw Error("joint MI never reaches saturation within the trace (threshold " + std::to_string(threshold) + ")");
}

inline std::size_t detect_saturation(const SelectionTrace& trace, double full_mi, double rel_tol) {
  const auto curve = trace.joint_mi_curve();
  return detect_saturation(curve, full_mi, rel_tol);
}

// Splits s_sat by ur_raw > ur_tol, preserving order.
inline std::pair<FeatureSubset, FeatureSubset> partition_ur(const FeatureSubset& s_sat,
                                                            const RelevanceProfile& profile, double ur_tol) {
  FeatureSubset ur, zur;
  for (auto j : s_sat) {
    if (j >= profile.size()) throw Error("UR profile does not cover feature " + std::to_string(j));
    (profile.ur_raw[j] > ur_tol ? ur : zur).push_back(j);
  }
  return {ur, zur};
}

struct SredResult {
  FeatureSubset s_red;
  FeatureSubset s_cr;
  std::uint64_t subsets_evaluated = 0;
};

namespace detail {

// Advances `c` (strictly increasing positions in [0, n)) to the next
// combination in lexicographic order; false after the last one.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Largest removable S_red within s_zur. Sizes are tried in decreasing
// order, combinations of index-sorted s_zur lexicographically within a size;
// the first S with I(s_ur u (s_zur \ S);Y) >= I(s_ur u s_zur;Y) - mi_tol wins.
inline SredResult find_sred(MiEngine& engine, const FeatureSubset& s_ur, const FeatureSubset& s_zur,
                            double mi_tol, std::size_t max_exhaustive = 25) {
  if (!(mi_tol >= 0.0)) throw Error("mi_tol must be non-negative");
  for (auto j : s_zur)
    if (s_ur.contains(j)) throw Error("s_ur and s_zur overlap at feature " + std::to_string(j));
  if (s_zur.size() > max_exhaustive)
    throw Error("exhaustive search infeasible: |s_zur| = " + std::to_string(s_zur.size()) +
                " exceeds max_exhaustive = " + std::to_string(max_exhaustive));
  SredResult out;
  out.s_cr = s_zur;
  if (s_zur.empty()) return out;

  const auto zur = s_zur.sorted();
  const std::size_t n = zur.size();
  const FeatureSubset sat = s_ur.united(s_zur);
  const bool plugin = engine.uses_plugin(sat);
  const double target = engine.joint_mi(sat).value - mi_tol - kNumericSlack;

  // KSG path: distances over a union are the elementwise max of per-feature
  // distances, so each candidate reuses precomputed matrices.
  std::vector<double> base;
  std::vector<std::vector<double>> per;
  if (!plugin) {
    base = engine.distance_matrix(s_ur);
    per.reserve(n);
    for (auto j : zur) per.push_back(engine.distance_matrix(FeatureSubset{j}));
  }

  auto evaluate = [&](const std::vector<std::size_t>& removed) {
    std::vector<bool> drop(n, false);
    for (auto p : removed) drop[p] = true;
    if (plugin) {
      FeatureSubset rest = s_ur;
      for (std::size_t p = 0; p < n; ++p)
        if (!drop[p]) rest.push_back(zur[p]);
      return engine.joint_mi(rest).value;
    }
    if (s_ur.empty() && removed.size() == n) return 0.0;
    std::vector<double> dm = base;
    for (std::size_t p = 0; p < n; ++p) {
      if (drop[p]) continue;
      const auto& m = per[p];
      for (std::size_t i = 0; i < dm.size(); ++i) dm[i] = std::max(dm[i], m[i]);
    }
    return engine.mixed_from_matrix(dm);
  };

  // Ordered evaluation; each estimate already uses the worker budget.
  for (std::size_t size = n; size >= 1; --size) {
    std::vector<std::size_t> comb(size);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    do {
      ++out.subsets_evaluated;
      if (evaluate(comb) < target) continue;
      std::vector<bool> drop(n, false);
      for (auto p : comb) drop[p] = true;
      FeatureSubset red, cr;
      for (auto j : s_zur) {
        const auto p = static_cast<std::size_t>(std::lower_bound(zur.begin(), zur.end(), j) - zur.begin());
        (drop[p] ? red : cr).push_back(j);
      }
      out.s_red = red;
      out.s_cr = cr;
      return out;
    } while (detail::next_combination(comb, n));
  }
  return out;
}

// Full audit: selection over every feature, saturation, partition by KSG
// unique relevance, S_red search, gamma, and a post-hoc removal check.
inline RedundancyReport audit(MiEngine& engine, ScoreConfig cfg, const AuditTolerances& tol = {}) {
  tol.validate();
  const Dataset& d = engine.data();
  const std::size_t m = d.n_features();
  cfg.budget = m;
  cfg.validate(m);

  RedundancyReport r;
  r.rel_tol = tol.rel_tol;
  r.ur_tol = tol.ur_tol;
  auto profile = profile_for(engine, cfg);
  r.trace = select(engine, cfg, profile ? &*profile : nullptr);
  if (profile && profile->ur_estimator == UrEstimator::KSG)
    r.ur_profile = *profile;
  else
    r.ur_profile = ur_ksg(engine);

  const auto all = FeatureSubset::all(m);
  r.full_mi = engine.joint_mi(all).value;
  r.sat_step = detect_saturation(r.trace, r.full_mi, tol.rel_tol);
  const auto order = r.trace.order();
  r.s_sat = FeatureSubset(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r.sat_step)));
  std::tie(r.s_ur, r.s_zur) = partition_ur(r.s_sat, r.ur_profile, tol.ur_tol);

  r.tolerance_used = tol.mi_tol ? *tol.mi_tol : (engine.uses_plugin(r.s_sat) ? 0.0 : 1e-3);
  auto sred = find_sred(engine, r.s_ur, r.s_zur, r.tolerance_used, tol.max_exhaustive);
  r.s_red = sred.s_red;
  r.s_cr = sred.s_cr;
  r.subsets_evaluated = sred.subsets_evaluated;
  r.gamma = static_cast<double>(r.s_red.size()) / static_cast<double>(r.s_sat.size());

  FeatureSubset reduced;
  for (auto j : r.s_sat)
    if (!r.s_red.contains(j)) reduced.push_back(j);
  r.sat_mi = engine.joint_mi(r.s_sat).value;
  r.reduced_mi = engine.joint_mi(reduced).value;
  if (r.reduced_mi < r.sat_mi - r.tolerance_used - kNumericSlack)
    throw Error("audit: removing S_red lowers joint MI beyond mi_tol");
  return r;
}

// Structural partition checks; throws on the first violation.
inline void check_report(const RedundancyReport& r) {
  auto expect = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("redundancy report: ") + what);
  };
  expect(r.s_ur.size() + r.s_zur.size() == r.s_sat.size(), "|s_ur| + |s_zur| != |s_sat|");
  expect(r.s_ur.united(r.s_zur).sorted() == r.s_sat.sorted(), "s_sat != s_ur u s_zur");
  expect(r.s_cr.size() + r.s_red.size() == r.s_zur.size(), "|s_cr| + |s_red| != |s_zur|");
  expect(r.s_cr.united(r.s_red).sorted() == r.s_zur.sorted(), "s_zur != s_cr u s_red");
  expect(r.sat_step == r.s_sat.size(), "sat_step != |s_sat|");
  expect(r.gamma == static_cast<double>(r.s_red.size()) / static_cast<double>(r.s_sat.size()),
         "gamma != |s_red| / |s_sat|");
  expect(r.reduced_mi >= r.sat_mi - r.tolerance_used - kNumericSlack, "removal lowers joint MI");
}

}  // namespace fsur

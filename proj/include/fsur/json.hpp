// JSON serialization of profiles, traces, audit and evaluation reports.
#pragma once

#include <json.hpp>

#include "fsur/audit.hpp"
#include "fsur/evaluation.hpp"

namespace fsur {

using Json = nlohmann::ordered_json;

inline Json subset_json(const FeatureSubset& s) { return Json(s.indices()); }

inline Json named_subset_json(const Dataset& d, const FeatureSubset& s) {
  Json a = Json::array();
  for (auto j : s) a.push_back({{"index", j}, {"name", d.feature_name(j)}});
  return a;
}

inline Json to_json(const EstimatorConfig& c) {
  return {{"family", to_string(c.family)},     {"ksg_k", c.ksg_k},
          {"standardize", c.standardize},      {"jitter_scale", c.jitter_scale},
          {"jitter_seed", c.jitter_seed},      {"threads", c.threads}};
}

inline Json to_json(const ClfUrConfig& c) {
  return {{"folds", c.folds}, {"knn_k", c.knn_k}, {"smoothing", c.smoothing}, {"seed", c.seed}};
}

inline Json to_json(const ScoreConfig& c) {
  return {{"method", to_string(c.method)}, {"beta", c.beta},
          {"ur_source", to_string(c.ur_source)}, {"budget", c.budget},
          {"estimator", to_json(c.estimator)}, {"clf", to_json(c.clf)}};
}

inline Json to_json(const Dataset& d, const RelevanceProfile& p) {
  Json a = Json::array();
  for (std::size_t j = 0; j < p.size(); ++j)
    a.push_back({{"index", j},
                 {"name", d.feature_name(j)},
                 {"kind", to_string(d.kind(j))},
                 {"ur_raw", p.ur_raw[j]},
                 {"ur_norm", p.ur_norm[j]},
                 {"marginal_mi", p.marginal_mi[j]},
                 {"irrelevance", p.irrelevance[j]}});
  return a;
}

inline Json profile_json(const Dataset& d, const RelevanceProfile& p) {
  return {{"ur_estimator", to_string(p.ur_estimator)},
          {"train_rows_hash", to_hex(p.train_rows_hash)},
          {"features", to_json(d, p)}};
}

inline Json to_json(const Dataset& d, const SelectionTrace& t) {
  Json order = Json::array();
  Json seconds = Json::array();
  for (const auto& s : t.steps) {
    order.push_back({{"index", s.index}, {"name", d.feature_name(s.index)}, {"score", s.score},
                     {"joint_mi", s.joint_mi}});
    seconds.push_back(s.seconds);
  }
  Json j = {{"config", to_json(t.config)}, {"train_rows_hash", to_hex(t.train_rows_hash)},
            {"order", order}};
  if (t.ur_profile) j["ur_profile"] = profile_json(d, *t.ur_profile);
  j["timings"] = {{"step_seconds", seconds},
                  {"estimator_calls", t.estimator_calls},
                  {"cache_hits", t.cache_hits}};
  return j;
}

inline Json to_json(const Dataset& d, const RedundancyReport& r) {
  return {{"sat_step", r.sat_step},
          {"gamma", r.gamma},
          {"n_red", r.s_red.size()},
          {"n_sat", r.s_sat.size()},
          {"s_sat", named_subset_json(d, r.s_sat)},
          {"s_ur", named_subset_json(d, r.s_ur)},
          {"s_zur", named_subset_json(d, r.s_zur)},
          {"s_cr", named_subset_json(d, r.s_cr)},
          {"s_red", named_subset_json(d, r.s_red)},
          {"tolerances", {{"rel_tol", r.rel_tol}, {"ur_tol", r.ur_tol}, {"mi_tol", r.tolerance_used}}},
          {"full_mi", r.full_mi},
          {"sat_mi", r.sat_mi},
          {"reduced_mi", r.reduced_mi},
          {"subsets_evaluated", r.subsets_evaluated},
          {"joint_mi_curve", r.trace.joint_mi_curve()},
          {"trace", to_json(d, r.trace)},
          {"ur_profile", profile_json(d, r.ur_profile)}};
}

inline Json to_json(const EvalConfig& c) {
  return {{"runs", c.runs},
          {"split", {{"train", c.split.train_frac}, {"val", c.split.val_frac}, {"test", c.split.test_frac}}},
          {"k_budget", c.k_budget},
          {"knn_grid", c.knn_grid},
          {"master_seed", c.master_seed},
          {"score_config", to_json(c.score_config)}};
}

inline Json to_json(const EvalReport& r) {
  Json runs = Json::array();
  for (const auto& x : r.per_run)
    runs.push_back({{"run", x.run},
                    {"seed", x.seed},
                    {"chosen_n", x.chosen_n},
                    {"knn_k", x.knn_k},
                    {"test_acc", x.test_acc},
                    {"val_curve", x.val_curve},
                    {"val_best_knn", x.val_best_knn},
                    {"order", subset_json(x.order)},
                    {"train_rows_hash", to_hex(x.train_rows_hash)},
                    {"leakage_ok", x.leakage_ok}});
  const auto& sc = r.config.score_config;
  return {{"method", to_string(sc.method)},
          {"beta", sc.beta},
          {"ur_source", to_string(sc.ur_source)},
          {"mean_acc", r.mean_acc},
          {"std_acc", r.std_acc},
          {"mean_n_features", r.mean_n_features},
          {"config", to_json(r.config)},
          {"per_run", runs}};
}

// Copy of `j` with every "timings" member removed, for determinism checks.
inline Json strip_timings(const Json& j) {
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "timings") out[it.key()] = strip_timings(it.value());
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(strip_timings(v));
    return out;
  }
  return j;
}

}  // namespace fsur

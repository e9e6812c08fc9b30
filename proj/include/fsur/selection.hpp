// Scoring functions for greedy MI-based selection, the unique-relevance
// boost, and the forward-selection loop.
#pragma once

#include <chrono>
#include <optional>

#include "fsur/mi.hpp"
#include "fsur/relevance.hpp"

namespace fsur {

enum class Method { MIM, MRMR, JMI, JMIM, GSA };
enum class UrSource { None, KSG, CLF };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::MIM: return "mim";
    case Method::MRMR: return "mrmr";
    case Method::JMI: return "jmi";
    case Method::JMIM: return "jmim";
    case Method::GSA: return "gsa";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "mim") return Method::MIM;
  if (s == "mrmr") return Method::MRMR;
  if (s == "jmi") return Method::JMI;
  if (s == "jmim") return Method::JMIM;
  if (s == "gsa") return Method::GSA;
  throw Error("unknown method '" + std::string(s) + "'");
}

inline const char* to_string(UrSource u) {
  switch (u) {
    case UrSource::None: return "none";
    case UrSource::KSG: return "ksg";
    case UrSource::CLF: return "clf";
  }
  return "?";
}

inline UrSource parse_ur_source(std::string_view s) {
  if (s == "none") return UrSource::None;
  if (s == "ksg") return UrSource::KSG;
  if (s == "clf") return UrSource::CLF;
  throw Error("unknown UR source '" + std::string(s) + "'");
}

inline constexpr std::array<Method, 5> kAllMethods{Method::MIM, Method::MRMR, Method::JMI, Method::JMIM,
                                                   Method::GSA};

struct ScoreConfig {
  Method method = Method::GSA;
  double beta = 0.1;
  UrSource ur_source = UrSource::KSG;
  EstimatorConfig estimator;
  std::size_t budget = 0;  // 0 selects every feature
  ClfUrConfig clf;

  static ScoreConfig plain(Method m, std::size_t budget = 0) {
    ScoreConfig c;
    c.method = m;
    c.beta = 0.0;
    c.ur_source = UrSource::None;
    c.budget = budget;
    return c;
  }

  void validate(std::size_t m) const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error("beta must lie in [0, 1]");
    if (ur_source == UrSource::None && beta > 0.0)
      throw Error("beta > 0 requires a UR source (ksg or clf)");
    if (ur_source != UrSource::None && beta == 0.0)
      throw Error("a UR source was given with beta = 0");
    if (budget > m) throw Error("budget exceeds the number of features");
    estimator.validate();
  }
};

struct SelectionStep {
  std::size_t index = 0;
  double score = 0.0;
  double joint_mi = 0.0;
  double seconds = 0.0;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  ScoreConfig config;
  std::optional<RelevanceProfile> ur_profile;
  std::uint64_t train_rows_hash = 0;
  std::uint64_t estimator_calls = 0;
  std::uint64_t cache_hits = 0;

  FeatureSubset order() const {
    std::vector<std::size_t> idx;
    for (const auto& s : steps) idx.push_back(s.index);
    return FeatureSubset(std::move(idx));
  }
  std::vector<double> joint_mi_curve() const {
    std::vector<double> v;
    for (const auto& s : steps) v.push_back(s.joint_mi);
    return v;
  }
  std::vector<double> step_scores() const {
    std::vector<double> v;
    for (const auto& s : steps) v.push_back(s.score);
    return v;
  }
};

// Scoring state: the engine plus the currently selected subset.
class SelectionState {
 public:
  explicit SelectionState(MiEngine& engine) : engine_(&engine) {}

  MiEngine& engine() const { return *engine_; }
  const FeatureSubset& selected() const { return selected_; }
  void add(std::size_t j) { selected_.push_back(j); }

 private:
  MiEngine* engine_;
  FeatureSubset selected_;
};

namespace detail {
inline void require_unselected(const SelectionState& st, std::size_t x) {
  if (st.selected().contains(x)) throw Error("candidate " + std::to_string(x) + " is already selected");
}
}  // namespace detail

// I(X;Y).
inline double score_mim(std::size_t x, const SelectionState& st) {
  detail::require_unselected(st, x);
  return st.engine().joint_mi(FeatureSubset{x}).value;
}

// I(X;Y) - mean_{j in S} I(X;X_j); the penalty is zero for empty S.
inline double score_mrmr(std::size_t x, const SelectionState& st) {
  const double rel = score_mim(x, st);
  const auto& s = st.selected();
  if (s.empty()) return rel;
  std::vector<double> red;
  red.reserve(s.size());
  for (auto j : s) red.push_back(st.engine().feature_mi(x, j).value);
  return rel - pairwise_sum(red) / static_cast<double>(s.size());
}

// sum_{j in S} I(X, X_j;Y); marginal MI for empty S.
inline double score_jmi(std::size_t x, const SelectionState& st) {
  const auto& s = st.selected();
  if (s.empty()) return score_mim(x, st);
  detail::require_unselected(st, x);
  std::vector<double> terms;
  terms.reserve(s.size());
  for (auto j : s) terms.push_back(st.engine().joint_mi(FeatureSubset{x, j}).value);
  return pairwise_sum(terms);
}

// min_{j in S} I(X, X_j;Y); marginal MI for empty S.
inline double score_jmim(std::size_t x, const SelectionState& st) {
  const auto& s = st.selected();
  if (s.empty()) return score_mim(x, st);
  detail::require_unselected(st, x);
  double best = std::numeric_limits<double>::infinity();
  for (auto j : s) best = std::min(best, st.engine().joint_mi(FeatureSubset{x, j}).value);
  return best;
}

// I(S u {X};Y).
inline double score_gsa(std::size_t x, const SelectionState& st) {
  detail::require_unselected(st, x);
  auto s = st.selected();
  s.push_back(x);
  return st.engine().joint_mi(s).value;
}

inline double score(Method m, std::size_t x, const SelectionState& st) {
  switch (m) {
    case Method::MIM: return score_mim(x, st);
    case Method::MRMR: return score_mrmr(x, st);
    case Method::JMI: return score_jmi(x, st);
    case Method::JMIM: return score_jmim(x, st);
    case Method::GSA: return score_gsa(x, st);
  }
  throw Error("unknown method");
}

// (1 - beta) * j_adj + beta * ur_norm[x]. JMI is divided by |S| first
// (unchanged at |S| = 0). beta = 0 returns j_org untouched.
inline double apply_bur(double j_org, std::size_t x, const ScoreConfig& cfg, const RelevanceProfile* profile,
                        std::size_t selected_size) {
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw Error("beta must lie in [0, 1]");
  if (cfg.beta == 0.0) return j_org;
  if (!profile) throw Error("beta > 0 requires a UR profile");
  if (x >= profile->size()) throw Error("UR profile does not cover feature " + std::to_string(x));
  double j_adj = j_org;
  if (cfg.method == Method::JMI && selected_size >= 1) j_adj = j_org / static_cast<double>(selected_size);
  return (1.0 - cfg.beta) * j_adj + cfg.beta * profile->ur_norm[x];
}

// Greedy forward selection. At each step every unselected feature is scored,
// boosted, and the maximum taken; ties resolve to the lowest feature index.
inline SelectionTrace select(MiEngine& engine, const ScoreConfig& cfg,
                             const RelevanceProfile* profile = nullptr) {
  const Dataset& d = engine.data();
  const std::size_t m = d.n_features();
  if (cfg.budget > m) throw Error("budget exceeds the number of features");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw Error("beta must lie in [0, 1]");
  if (cfg.beta > 0.0 && !profile) throw Error("beta > 0 requires a UR profile");
  if (profile && profile->size() != m) throw Error("UR profile size does not match the dataset");
  const std::size_t budget = cfg.budget == 0 ? m : cfg.budget;

  SelectionTrace trace;
  trace.config = cfg;
  trace.config.budget = budget;
  if (profile) trace.ur_profile = *profile;
  trace.train_rows_hash = d.rows_hash();
  const auto calls0 = engine.estimator_calls();
  const auto hits0 = engine.cache_hits();

  SelectionState st(engine);
  std::vector<bool> taken(m, false);
  for (std::size_t step = 0; step < budget; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      if (taken[x]) continue;
      double s = 0.0;
      try {
        s = apply_bur(score(cfg.method, x, st), x, cfg, profile, st.selected().size());
      } catch (const Error& e) {
        throw Error("step " + std::to_string(step + 1) + ", candidate " + std::to_string(x) + " ('" +
                    d.feature_name(x) + "'): " + e.what());
      }
      if (!best || s > best_score) {
        best = x;
        best_score = s;
      }
    }
    taken[*best] = true;
    st.add(*best);
    SelectionStep rec;
    rec.index = *best;
    rec.score = best_score;
    rec.joint_mi = engine.joint_mi(st.selected()).value;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.steps.push_back(rec);
  }
  trace.estimator_calls = engine.estimator_calls() - calls0;
  trace.cache_hits = engine.cache_hits() - hits0;
  return trace;
}

// Builds the UR profile the configuration asks for, on the engine's data.
inline std::optional<RelevanceProfile> profile_for(MiEngine& engine, const ScoreConfig& cfg) {
  switch (cfg.ur_source) {
    case UrSource::None: return std::nullopt;
    case UrSource::KSG: return ur_ksg(engine);
    case UrSource::CLF: return ur_clf(engine.data(), cfg.clf, engine.config());
  }
  return std::nullopt;
}

// UR is computed once, before the loop, then selection runs.
inline SelectionTrace select_with_ur(MiEngine& engine, const ScoreConfig& cfg) {
  cfg.validate(engine.data().n_features());
  auto profile = profile_for(engine, cfg);
  return select(engine, cfg, profile ? &*profile : nullptr);
}

}  // namespace fsur

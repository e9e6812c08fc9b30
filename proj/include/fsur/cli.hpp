// Command-line front end. `dispatch` is callable in-process so tests can
// drive every subcommand and compare the reports it writes.
#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fsur/fsur.hpp"
#include "fsur/json.hpp"

namespace fsur::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

// Invalid or conflicting options; mapped to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct CommonOptions {
  std::string data;
  std::string label = "class";
  std::vector<std::string> kinds;  // name=discrete|continuous
  std::string method = "gsa";
  std::optional<double> beta;
  std::string ur_source;  // empty: inferred from beta
  std::string estimator = "auto";
  std::size_t ksg_k = 3;
  double jitter = 1e-10;
  bool no_standardize = false;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string cache_dir;
  std::string out;
  std::string format = "json";
  std::size_t folds = 5;
  std::size_t clf_k = 5;
  double smoothing = 1.0;
};

struct AuditOptions {
  double rel_tol = 1e-3;
  double ur_tol = 1e-3;
  std::optional<double> mi_tol;
  std::size_t max_exhaustive = 25;
};

struct EvalOptions {
  std::size_t runs = 20;
  std::size_t k_budget = 0;
  std::size_t knn_min = 3;
  std::size_t knn_max = 50;
  std::size_t knn_step = 2;
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct MiOptions {
  std::vector<std::string> x;
  std::vector<std::string> y;  // empty: the label
  std::vector<std::string> given;
};

struct SynthOptions {
  std::size_t noise = 0;
  std::size_t per_cell = 50;
  std::size_t copies = 2;
  std::size_t rows = 200;
  double rho = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

namespace detail {

inline void add_common(CLI::App* sub, CommonOptions& o, bool selection) {
  sub->add_option("--data", o.data, "CSV dataset")->required();
  sub->add_option("--label", o.label, "label column name")->capture_default_str();
  sub->add_option("--kind", o.kinds, "feature kind override NAME=discrete|continuous");
  sub->add_option("--estimator", o.estimator, "auto|plugin|ksg")->capture_default_str();
  sub->add_option("--ksg-k", o.ksg_k, "nearest-neighbour count for KSG")->capture_default_str();
  sub->add_option("--jitter", o.jitter, "relative jitter magnitude")->capture_default_str();
  sub->add_flag("--no-standardize", o.no_standardize, "skip z-scoring before KSG");
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
  sub->add_option("--threads", o.threads, "worker threads")->capture_default_str();
  sub->add_option("--cache-dir", o.cache_dir, "persistent MI cache directory")->envname("FSUR_CACHE_DIR");
  sub->add_option("--out", o.out, "output file (default stdout)");
  sub->add_option("--format", o.format, "json|csv")->capture_default_str();
  sub->add_option("--ur-source", o.ur_source, "none|ksg|clf");
  sub->add_option("--folds", o.folds, "folds of the classifier UR")->capture_default_str();
  sub->add_option("--clf-k", o.clf_k, "neighbours of the classifier UR")->capture_default_str();
  sub->add_option("--smoothing", o.smoothing, "vote smoothing of the classifier UR")->capture_default_str();
  if (selection) {
    sub->add_option("--method", o.method, "mim|mrmr|jmi|jmim|gsa")->capture_default_str();
    sub->add_option("--beta", o.beta, "UR boost weight in [0, 1]");
    sub->add_option("--budget", o.budget, "number of features to select (0: all)")->capture_default_str();
  }
}

inline Dataset load(const CommonOptions& o) {
  KindOverrides overrides;
  for (const auto& kv : o.kinds) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--kind expects NAME=KIND, got '" + kv + "'");
    try {
      overrides[kv.substr(0, eq)] = parse_feature_kind(kv.substr(eq + 1));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  return load_csv(o.data, o.label, overrides);
}

inline EstimatorConfig estimator_config(const CommonOptions& o) {
  EstimatorConfig c;
  try {
    c.family = parse_estimator_family(o.estimator);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  c.ksg_k = o.ksg_k;
  c.standardize = !o.no_standardize;
  c.jitter_scale = o.jitter;
  c.jitter_seed = o.seed;
  c.threads = std::max(1u, o.threads);
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

// Resolves method, beta and UR source. An unspecified source follows beta;
// an unspecified beta is 0.1 with a source and 0 without one.
inline ScoreConfig score_config(const CommonOptions& o, std::size_t m) {
  ScoreConfig c;
  try {
    c.method = parse_method(o.method);
    if (!o.ur_source.empty()) {
      c.ur_source = parse_ur_source(o.ur_source);
      c.beta = o.beta ? *o.beta : (c.ur_source == UrSource::None ? 0.0 : 0.1);
    } else {
      c.beta = o.beta.value_or(0.0);
      c.ur_source = c.beta > 0.0 ? UrSource::KSG : UrSource::None;
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (c.ur_source == UrSource::None && c.beta > 0.0)
    throw UsageError("conflicting options: --beta " + fsur::detail::format_double(c.beta) + " requires --ur-source ksg or clf");
  if (c.ur_source != UrSource::None && c.beta == 0.0)
    throw UsageError(std::string("conflicting options: --ur-source ") + to_string(c.ur_source) +
                     " with --beta 0");
  c.estimator = estimator_config(o);
  c.budget = o.budget;
  c.clf = ClfUrConfig{o.folds, o.clf_k, o.smoothing, o.seed};
  try {
    c.validate(m);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

inline std::unique_ptr<MiCache> make_cache(const CommonOptions& o) {
  if (o.cache_dir.empty()) return std::make_unique<MiCache>();
  return std::make_unique<MiCache>(std::filesystem::path(o.cache_dir));
}

inline Json manifest(const std::string& command, const std::vector<std::string>& argv, const Dataset& d,
                     const CommonOptions& o, Json resolved, double seconds) {
  return {{"tool", "fsur"},
          {"version", kVersion},
          {"command", command},
          {"argv", argv},
          {"config", std::move(resolved)},
          {"dataset",
           {{"path", o.data},
            {"label", o.label},
            {"n_rows", d.n_rows()},
            {"n_features", d.n_features()},
            {"n_classes", d.n_classes()},
            {"content_hash", to_hex(d.content_hash())}}},
          {"timings", {{"wall_seconds", seconds}}}};
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void require_format(const CommonOptions& o, bool csv_allowed) {
  if (o.format == "json") return;
  if (o.format == "csv" && csv_allowed) return;
  throw UsageError("unsupported --format '" + o.format + "' for this command");
}

inline FeatureSubset resolve_names(const Dataset& d, const std::vector<std::string>& names) {
  FeatureSubset s;
  for (const auto& n : names) {
    auto j = d.find_feature(n);
    if (!j) throw UsageError("unknown column '" + n + "'");
    if (s.contains(*j)) throw UsageError("column '" + n + "' listed twice");
    s.push_back(*j);
  }
  return s;
}

using Clock = std::chrono::steady_clock;

inline double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace detail

inline void run_select(const CommonOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  const auto t0 = detail::Clock::now();
  detail::require_format(o, true);
  const Dataset d = detail::load(o);
  const ScoreConfig sc = detail::score_config(o, d.n_features());
  auto cache = detail::make_cache(o);
  MiEngine engine(d, sc.estimator, cache.get());
  const SelectionTrace t = select_with_ur(engine, sc);
  if (o.format == "csv") {
    std::ostringstream s;
    s << "step,index,name,score,joint_mi\n";
    for (std::size_t i = 0; i < t.steps.size(); ++i)
      s << i + 1 << ',' << t.steps[i].index << ',' << fsur::detail::quote_csv(d.feature_name(t.steps[i].index)) << ','
        << fsur::detail::format_double(t.steps[i].score) << ',' << fsur::detail::format_double(t.steps[i].joint_mi) << '\n';
    detail::emit(o.out, s.str(), out);
    return;
  }
  Json j = to_json(d, t);
  Json report = {{"manifest", detail::manifest("select", argv, d, o, to_json(t.config), detail::since(t0))}};
  for (auto it = j.begin(); it != j.end(); ++it) report[it.key()] = it.value();
  detail::emit(o.out, detail::dump(report), out);
}

inline void run_audit(const CommonOptions& o, const AuditOptions& a, const std::vector<std::string>& argv,
                      std::ostream& out) {
  const auto t0 = detail::Clock::now();
  detail::require_format(o, true);
  const Dataset d = detail::load(o);
  ScoreConfig sc = detail::score_config(o, d.n_features());
  AuditTolerances tol{a.rel_tol, a.ur_tol, a.mi_tol, a.max_exhaustive};
  try {
    tol.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto cache = detail::make_cache(o);
  MiEngine engine(d, sc.estimator, cache.get());
  const RedundancyReport r = audit(engine, sc, tol);
  check_report(r);
  if (o.format == "csv") {
    std::ostringstream s;
    s << "step,index,name,joint_mi,part\n";
    const auto curve = r.trace.joint_mi_curve();
    for (std::size_t i = 0; i < r.trace.steps.size(); ++i) {
      const auto j = r.trace.steps[i].index;
      const char* part = i >= r.sat_step ? "after_sat" : r.s_ur.contains(j) ? "ur" : r.s_red.contains(j) ? "red" : "cr";
      s << i + 1 << ',' << j << ',' << fsur::detail::quote_csv(d.feature_name(j)) << ',' << fsur::detail::format_double(curve[i]) << ','
        << part << '\n';
    }
    detail::emit(o.out, s.str(), out);
    return;
  }
  Json resolved = to_json(r.trace.config);
  resolved["tolerances"] = {{"rel_tol", a.rel_tol},
                            {"ur_tol", a.ur_tol},
                            {"mi_tol", r.tolerance_used},
                            {"max_exhaustive", a.max_exhaustive}};
  Json report = {{"manifest", detail::manifest("audit", argv, d, o, resolved, detail::since(t0))}};
  Json j = to_json(d, r);
  for (auto it = j.begin(); it != j.end(); ++it) report[it.key()] = it.value();
  detail::emit(o.out, detail::dump(report), out);
}

inline void run_ur(const CommonOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  const auto t0 = detail::Clock::now();
  detail::require_format(o, false);
  const Dataset d = detail::load(o);
  const EstimatorConfig est = detail::estimator_config(o);
  UrSource src = UrSource::KSG;
  try {
    if (!o.ur_source.empty()) src = parse_ur_source(o.ur_source);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (src == UrSource::None) throw UsageError("ur needs --ur-source ksg or clf");
  auto cache = detail::make_cache(o);
  RelevanceProfile p;
  const ClfUrConfig clf{o.folds, o.clf_k, o.smoothing, o.seed};
  if (src == UrSource::KSG) {
    MiEngine engine(d, est, cache.get());
    p = ur_ksg(engine);
  } else {
    p = ur_clf(d, clf, est);
  }
  Json resolved = {{"ur_source", to_string(src)}, {"estimator", to_json(est)}};
  if (src == UrSource::CLF) resolved["clf"] = to_json(clf);
  Json report = {{"manifest", detail::manifest("ur", argv, d, o, resolved, detail::since(t0))},
                 {"ur_estimator", to_string(p.ur_estimator)},
                 {"train_rows_hash", to_hex(p.train_rows_hash)},
                 {"features", to_json(d, p)}};
  detail::emit(o.out, detail::dump(report), out);
}

inline void run_eval(const CommonOptions& o, const EvalOptions& e, const std::vector<std::string>& argv,
                     std::ostream& out) {
  const auto t0 = detail::Clock::now();
  detail::require_format(o, true);
  const Dataset d = detail::load(o);
  EvalConfig cfg;
  cfg.runs = e.runs;
  cfg.split = SplitSpec{e.train, e.val, e.test, 0};
  cfg.k_budget = e.k_budget;
  if (e.knn_step < 1 || e.knn_min < 1 || e.knn_min > e.knn_max)
    throw UsageError("invalid KNN grid bounds");
  cfg.knn_grid.clear();
  for (std::size_t k = e.knn_min; k <= e.knn_max; k += e.knn_step) cfg.knn_grid.push_back(k);
  cfg.score_config = detail::score_config(o, d.n_features());
  cfg.master_seed = o.seed;
  try {
    cfg.validate(d.n_features());
  } catch (const Error& err) {
    throw UsageError(err.what());
  }
  auto cache = detail::make_cache(o);
  const EvalReport rep = run_protocol(d, cfg, cache.get());
  if (o.format == "csv") {
    std::ostringstream s;
    s << "run,n,val_acc,best_knn\n";
    for (const auto& r : rep.per_run)
      for (std::size_t n = 0; n < r.val_curve.size(); ++n)
        s << r.run << ',' << n + 1 << ',' << fsur::detail::format_double(r.val_curve[n]) << ',' << r.val_best_knn[n] << '\n';
    detail::emit(o.out, s.str(), out);
    return;
  }
  Json report = {{"manifest", detail::manifest("eval", argv, d, o, to_json(cfg), detail::since(t0))}};
  Json j = to_json(rep);
  for (auto it = j.begin(); it != j.end(); ++it) report[it.key()] = it.value();
  detail::emit(o.out, detail::dump(report), out);
}

inline void run_mi(const CommonOptions& o, const MiOptions& m, const std::vector<std::string>& argv,
                   std::ostream& out) {
  const auto t0 = detail::Clock::now();
  detail::require_format(o, false);
  const Dataset d = detail::load(o);
  const EstimatorConfig est = detail::estimator_config(o);
  const FeatureSubset x = detail::resolve_names(d, m.x);
  const FeatureSubset y = detail::resolve_names(d, m.y);
  const FeatureSubset z = detail::resolve_names(d, m.given);
  if (x.empty()) throw UsageError("mi needs --x");
  auto cache = detail::make_cache(o);
  MiEngine engine(d, est, cache.get());
  double value = 0.0;
  std::string family;
  if (y.empty()) {
    for (auto j : x)
      if (z.contains(j)) throw UsageError("--x and --given overlap");
    value = z.empty() ? engine.joint_mi(x).value : engine.cond_mi(x, z);
    family = to_string(engine.uses_plugin(x.united(z)) ? EstimatorFamily::Plugin : EstimatorFamily::KSG);
  } else {
    if (!z.empty()) throw UsageError("--given is only supported with the label as target");
    for (auto j : x)
      if (y.contains(j)) throw UsageError("--x and --y overlap");
    std::vector<ColumnView> cx, cy;
    for (auto j : x) cx.push_back(d.column(j));
    for (auto j : y) cy.push_back(d.column(j));
    const auto both = x.united(y);
    MIValue v = engine.uses_plugin(both) ? mi_plugin(cx, cy) : mi_ksg(cx, cy, est);
    value = v.value;
    family = to_string(v.estimator);
  }
  auto names = [&](const FeatureSubset& s) {
    Json a = Json::array();
    for (auto j : s) a.push_back(d.feature_name(j));
    return a;
  };
  Json resolved = {{"x", names(x)}, {"y", y.empty() ? Json(d.label_name()) : names(y)}, {"given", names(z)},
                   {"estimator", to_json(est)}};
  Json report = {{"manifest", detail::manifest("mi", argv, d, o, resolved, detail::since(t0))},
                 {"x", names(x)},
                 {"y", y.empty() ? Json(d.label_name()) : names(y)},
                 {"given", names(z)},
                 {"value", value},
                 {"estimator", family}};
  detail::emit(o.out, detail::dump(report), out);
}

inline void run_synth(const std::string& kind, const SynthOptions& s, std::ostream& out) {
  Dataset d = kind == "xor"         ? synth_xor(s.noise, s.per_cell, s.seed)
              : kind == "duplicate" ? synth_duplicate(s.copies, s.rows, s.seed)
                                    : synth_gaussian(s.rows, s.rho, s.seed);
  std::ostringstream text;
  write_csv(d, text);
  detail::emit(s.out, text.str(), out);
}

inline int dispatch(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr);

// Re-executes the argv recorded in a report's manifest, writing to `out_path`.
inline int replay(const std::filesystem::path& report, const std::string& out_path, std::ostream& out,
                  std::ostream& err) {
  std::ifstream in(report);
  if (!in) throw Error("cannot open '" + report.string() + "'");
  Json j = Json::parse(in);
  if (!j.contains("manifest") || !j["manifest"].contains("argv")) throw Error("report has no manifest argv");
  std::vector<std::string> args = j["manifest"]["argv"].get<std::vector<std::string>>();
  // --out is substituted in place so the replayed manifest records the same
  // argv whenever the destination is unchanged.
  std::vector<std::string> rewritten;
  bool had_out = false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      rewritten.push_back(args[i]);
      rewritten.push_back(out_path.empty() ? args[i + 1] : out_path);
      had_out = true;
      ++i;
    } else if (args[i].rfind("--out=", 0) == 0) {
      rewritten.push_back(out_path.empty() ? args[i] : "--out=" + out_path);
      had_out = true;
    } else {
      rewritten.push_back(args[i]);
    }
  }
  if (!had_out && !out_path.empty()) {
    rewritten.push_back("--out");
    rewritten.push_back(out_path);
  }
  return dispatch(rewritten, out, err);
}

// argv excludes the program name.
inline int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature selection with unique-relevance boosting", "fsur"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file; [subcommand] sections, flags take precedence");
  app.set_version_flag("--version", kVersion);

  CommonOptions common;
  AuditOptions aud;
  EvalOptions ev;
  MiOptions mo;
  SynthOptions so;
  std::string replay_report, replay_out;

  auto* sel = app.add_subcommand("select", "greedy selection trace");
  detail::add_common(sel, common, true);
  auto* au = app.add_subcommand("audit", "redundancy audit of a full selection");
  detail::add_common(au, common, true);
  au->add_option("--rel-tol", aud.rel_tol, "relative saturation tolerance")->capture_default_str();
  au->add_option("--ur-tol", aud.ur_tol, "UR threshold in nats")->capture_default_str();
  au->add_option("--mi-tol", aud.mi_tol, "joint-MI loss tolerance (default 0 plugin, 1e-3 KSG)");
  au->add_option("--max-exhaustive", aud.max_exhaustive, "largest |S_ZUR| searched")->capture_default_str();
  auto* ur = app.add_subcommand("ur", "unique-relevance profile");
  detail::add_common(ur, common, false);
  auto* evs = app.add_subcommand("eval", "multi-run KNN evaluation protocol");
  detail::add_common(evs, common, true);
  evs->add_option("--runs", ev.runs)->capture_default_str();
  evs->add_option("--k-budget", ev.k_budget, "largest feature count swept (0: all)")->capture_default_str();
  evs->add_option("--knn-min", ev.knn_min)->capture_default_str();
  evs->add_option("--knn-max", ev.knn_max)->capture_default_str();
  evs->add_option("--knn-step", ev.knn_step)->capture_default_str();
  evs->add_option("--train", ev.train)->capture_default_str();
  evs->add_option("--val", ev.val)->capture_default_str();
  evs->add_option("--test", ev.test)->capture_default_str();
  auto* mis = app.add_subcommand("mi", "ad-hoc MI between named columns");
  detail::add_common(mis, common, false);
  mis->add_option("--x", mo.x, "columns of X")->delimiter(',')->required();
  mis->add_option("--y", mo.y, "columns of Y (default: the label)")->delimiter(',');
  mis->add_option("--given", mo.given, "conditioning columns")->delimiter(',');
  auto* syn = app.add_subcommand("synth", "synthetic dataset generators");
  syn->require_subcommand(1);
  std::string synth_kind;
  for (const char* k : {"xor", "duplicate", "gaussian"}) {
    auto* g = syn->add_subcommand(k);
    g->add_option("--seed", so.seed)->capture_default_str();
    g->add_option("--out", so.out);
    if (std::string(k) == "xor") {
      g->add_option("--noise", so.noise)->capture_default_str();
      g->add_option("--per-cell", so.per_cell)->capture_default_str();
    } else if (std::string(k) == "duplicate") {
      g->add_option("--copies", so.copies)->capture_default_str();
      g->add_option("--rows", so.rows)->capture_default_str();
    } else {
      g->add_option("--rows", so.rows)->capture_default_str();
      g->add_option("--rho", so.rho)->capture_default_str();
    }
    g->callback([&synth_kind, k] { synth_kind = k; });
  }
  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a report manifest");
  rep->add_option("--report", replay_report)->required();
  rep->add_option("--out", replay_out);

  try {
    std::vector<std::string> rev(argv.rbegin(), argv.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (sel->parsed()) run_select(common, argv, out);
    else if (au->parsed()) run_audit(common, aud, argv, out);
    else if (ur->parsed()) run_ur(common, argv, out);
    else if (evs->parsed()) run_eval(common, ev, argv, out);
    else if (mis->parsed()) run_mi(common, mo, argv, out);
    else if (syn->parsed()) run_synth(synth_kind, so, out);
    else if (rep->parsed()) return replay(replay_report, replay_out, out, err);
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

inline int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args);
}

}  // namespace fsur::cli

// Entropy and mutual information estimators.
//
// Discrete data goes through the plugin (empirical frequency) estimator.
// Continuous data goes through k-nearest-neighbour estimators with
// Chebyshev (max-norm) distances:
//   * mi_ksg    continuous X vs continuous Y, Kraskov algorithm 1
//   * mi_mixed  continuous X vs discrete label, same-class radius variant
//   * kl_entropy  Kozachenko-Leonenko differential entropy
// All values are in nats.
#pragma once

#include <boost/math/special_functions/digamma.hpp>

#include <atomic>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "fsur/cache.hpp"
#include "fsur/common.hpp"
#include "fsur/dataset.hpp"
#include "fsur/mi_types.hpp"

namespace fsur {

namespace detail {

struct PairHash {
  std::size_t operator()(const std::pair<std::uint32_t, double>& p) const noexcept {
    return static_cast<std::size_t>(
        splitmix64((static_cast<std::uint64_t>(p.first) << 1) ^ std::bit_cast<std::uint64_t>(p.second)));
  }
};

// Relabels the joint value of `cols` per row as a dense code assigned in
// order of first appearance.
inline std::vector<std::uint32_t> joint_codes(std::span<const ColumnView> cols, std::size_t n,
                                              std::uint32_t& n_codes) {
  std::vector<std::uint32_t> codes(n, 0);
  n_codes = 1;
  for (const auto& col : cols) {
    std::unordered_map<std::pair<std::uint32_t, double>, std::uint32_t, PairHash> ids;
    ids.reserve(n_codes * 4);
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, fresh] = ids.try_emplace({codes[i], col[i]}, static_cast<std::uint32_t>(ids.size()));
      codes[i] = it->second;
    }
    n_codes = static_cast<std::uint32_t>(ids.size());
  }
  return codes;
}

inline double entropy_of_codes(std::span<const std::uint32_t> codes, std::uint32_t n_codes) {
  std::vector<std::size_t> counts(n_codes, 0);
  for (auto c : codes) ++counts[c];
  const double n = static_cast<double>(codes.size());
  std::vector<double> terms;
  terms.reserve(n_codes);
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    terms.push_back(-p * std::log(p));
  }
  return pairwise_sum(terms);
}

inline void require_integral(std::span<const ColumnView> cols) {
  for (const auto& col : cols)
    for (double v : col)
      if (!is_integral(v)) throw Error("plugin estimator: continuous column supplied");
}

inline std::size_t common_length(std::span<const ColumnView> a, std::span<const ColumnView> b = {}) {
  std::optional<std::size_t> n;
  for (auto s : {a, b})
    for (const auto& c : s) {
      if (n && *n != c.size()) throw Error("columns have different lengths");
      n = c.size();
    }
  if (!n) throw Error("no columns supplied");
  return *n;
}

// Fills out[j] = max_c |col_c[i] - col_c[j]| over the given columns.
inline void max_norm_row(std::span<const ColumnView> cols, std::size_t i, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& col : cols) {
    const double xi = col[i];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], std::abs(xi - col[j]));
  }
}

class DigammaTable {
 public:
  explicit DigammaTable(std::size_t n) : values_(n + 2, 0.0) {
    for (std::size_t i = 1; i < values_.size(); ++i) values_[i] = boost::math::digamma(static_cast<double>(i));
  }
  double operator()(std::size_t i) const {
    return i < values_.size() ? values_[i] : boost::math::digamma(static_cast<double>(i));
  }

 private:
  std::vector<double> values_;
};

// Kraskov algorithm 1: psi(k) + psi(N) - <psi(n_x + 1) + psi(n_y + 1)>.
inline double ksg_core(std::span<const ColumnView> x, std::span<const ColumnView> y, std::size_t k,
                       unsigned threads, const DigammaTable& psi) {
  const std::size_t n = x.front().size();
  std::vector<double> terms(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> dx(n), dy(n), dz(n);
    max_norm_row(x, i, dx);
    max_norm_row(y, i, dy);
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dz[w++] = std::max(dx[j], dy[j]);
    dz.resize(w);
    std::nth_element(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(k - 1), dz.end());
    const double eps = dz[k - 1];
    std::size_t nx = 0, ny = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (dx[j] < eps) ++nx;
      if (dy[j] < eps) ++ny;
    }
    terms[i] = psi(nx + 1) + psi(ny + 1);
  });
  return psi(k) + psi(n) - mean_of(terms);
}

inline void check_class_sizes(std::span<const std::size_t> counts, std::size_t k) {
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0 && counts[c] <= k)
      throw Error("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                  " samples; the nearest-neighbour estimator needs more than ksg_k = " +
                  std::to_string(k));
}

// Discrete-target nearest-neighbour estimator:
//   psi(N) - <psi(N_y)> + psi(k) - <psi(m_i)>
// where the radius is the k-th same-class neighbour distance and m_i counts
// all other samples within that radius. `row(i, out)` fills distances from i.
template <class RowFn>
double mixed_core(std::size_t n, std::span<const int> labels, std::span<const std::size_t> counts,
                  std::size_t k, unsigned threads, const DigammaTable& psi, RowFn&& row) {
  check_class_sizes(counts, k);
  std::vector<double> terms(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> dist(n);
    row(i, dist);
    const int yi = labels[i];
    std::vector<double> same;
    same.reserve(counts[static_cast<std::size_t>(yi)]);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == yi) same.push_back(dist[j]);
    std::nth_element(same.begin(), same.begin() + static_cast<std::ptrdiff_t>(k - 1), same.end());
    const double radius = same[k - 1];
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && dist[j] <= radius) ++m;
    terms[i] = psi(counts[static_cast<std::size_t>(yi)]) + psi(m);
  });
  return psi(n) + psi(k) - mean_of(terms);
}

inline double kl_core(std::span<const ColumnView> x, std::size_t k, unsigned threads,
                      const DigammaTable& psi) {
  const std::size_t n = x.front().size();
  std::vector<double> logs(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> d(n);
    max_norm_row(x, i, d);
    d.erase(d.begin() + static_cast<std::ptrdiff_t>(i));
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    const double r = d[k - 1];
    if (!(r > 0.0)) throw Error("differential entropy: duplicate points at zero distance");
    logs[i] = std::log(2.0 * r);
  });
  return psi(n) - psi(k) + static_cast<double>(x.size()) * mean_of(logs);
}

}  // namespace detail

// Standardises (optional) and jitters one column. `stream` selects the
// jitter sequence; dataset-level callers pass the column index.
inline std::vector<double> prepare_column(ColumnView col, std::uint64_t stream,
                                          const EstimatorConfig& cfg, bool standardize) {
  std::vector<double> v(col.begin(), col.end());
  if (v.empty()) return v;
  if (standardize) {
    const double mu = mean_of(v);
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mu) * (v[i] - mu);
    const double sd = std::sqrt(mean_of(sq));
    for (auto& x : v) x = sd > 0.0 ? (x - mu) / sd : x - mu;
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  const double magnitude = cfg.jitter_scale * (range > 0.0 ? range : 1.0);
  if (magnitude > 0.0) {
    Rng rng(derive_seed(cfg.jitter_seed, stream));
    for (auto& x : v) x += magnitude * rng.uniform();
  }
  const auto [lo2, hi2] = std::minmax_element(v.begin(), v.end());
  if (!(*hi2 > *lo2)) throw Error("zero-variance column after jitter");
  return v;
}

// ---------------------------------------------------------------------------
// Column-level estimators.

inline double entropy_plugin(std::span<const ColumnView> cols) {
  const std::size_t n = detail::common_length(cols);
  if (n == 0) throw Error("entropy of an empty sample");
  detail::require_integral(cols);
  std::uint32_t n_codes = 0;
  auto codes = detail::joint_codes(cols, n, n_codes);
  return detail::entropy_of_codes(codes, n_codes);
}

inline double entropy_plugin(ColumnView col) { return entropy_plugin(std::span<const ColumnView>(&col, 1)); }

inline MIValue mi_plugin(std::span<const ColumnView> x, std::span<const ColumnView> y) {
  const std::size_t n = detail::common_length(x, y);
  if (x.empty() || y.empty()) throw Error("mi_plugin needs non-empty column sets");
  std::vector<ColumnView> xy(x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  const double hx = entropy_plugin(x);
  const double hy = entropy_plugin(y);
  const double hxy = entropy_plugin(xy);
  return {hx + hy - hxy, EstimatorFamily::Plugin, n};
}

inline MIValue mi_ksg(std::span<const ColumnView> x, std::span<const ColumnView> y,
                      const EstimatorConfig& cfg) {
  cfg.validate();
  if (x.empty() || y.empty()) throw Error("mi_ksg needs non-empty column sets");
  const std::size_t n = detail::common_length(x, y);
  if (n <= cfg.ksg_k) throw Error("mi_ksg: N must exceed ksg_k");
  std::vector<std::vector<double>> px, py;
  std::uint64_t stream = 0;
  for (const auto& c : x) px.push_back(prepare_column(c, stream++, cfg, cfg.standardize));
  for (const auto& c : y) py.push_back(prepare_column(c, stream++, cfg, cfg.standardize));
  std::vector<ColumnView> vx(px.begin(), px.end()), vy(py.begin(), py.end());
  detail::DigammaTable psi(n);
  return {detail::ksg_core(vx, vy, cfg.ksg_k, cfg.threads, psi), EstimatorFamily::KSG, n};
}

inline MIValue mi_mixed(std::span<const ColumnView> x, std::span<const int> labels,
                        const EstimatorConfig& cfg) {
  cfg.validate();
  if (x.empty()) throw Error("mi_mixed needs a non-empty column set");
  const std::size_t n = detail::common_length(x);
  if (labels.size() != n) throw Error("label length does not match columns");
  int max_label = 0;
  for (int y : labels) {
    if (y < 0) throw Error("negative label code");
    max_label = std::max(max_label, y);
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  std::vector<std::vector<double>> px;
  std::uint64_t stream = 0;
  for (const auto& c : x) px.push_back(prepare_column(c, stream++, cfg, cfg.standardize));
  std::vector<ColumnView> vx(px.begin(), px.end());
  detail::DigammaTable psi(n);
  const double v = detail::mixed_core(n, labels, counts, cfg.ksg_k, cfg.threads, psi,
                                      [&](std::size_t i, std::vector<double>& out) {
                                        detail::max_norm_row(vx, i, out);
                                      });
  return {v, EstimatorFamily::KSG, n};
}

// Differential entropy of a continuous column set (original scale, jittered).
inline double kl_entropy(std::span<const ColumnView> x, const EstimatorConfig& cfg) {
  cfg.validate();
  const std::size_t n = detail::common_length(x);
  if (n <= cfg.ksg_k) throw Error("kl_entropy: N must exceed ksg_k");
  std::vector<std::vector<double>> px;
  std::uint64_t stream = 0;
  for (const auto& c : x) px.push_back(prepare_column(c, stream++, cfg, false));
  std::vector<ColumnView> vx(px.begin(), px.end());
  detail::DigammaTable psi(n);
  return detail::kl_core(vx, cfg.ksg_k, cfg.threads, psi);
}

// ---------------------------------------------------------------------------
// Dataset-level estimation with caching.
//
// The engine prepares every column once (standardise + jitter keyed by the
// dataset column index), so an estimate for a subset does not depend on the
// order in which its members are listed.

class MiEngine {
 public:
  MiEngine(const Dataset& d, EstimatorConfig cfg, MiCache* cache = nullptr)
      : d_(&d), cfg_(cfg), cache_(cache), dataset_hash_(d.content_hash()),
        config_hash_(cfg.hash()), psi_(d.n_rows()), counts_(d.class_counts()) {
    cfg_.validate();
    label_col_.reserve(d.n_rows());
    for (int y : d.labels()) label_col_.push_back(static_cast<double>(y));
  }

  MiEngine(const MiEngine&) = delete;
  MiEngine& operator=(const MiEngine&) = delete;

  const Dataset& data() const { return *d_; }
  const EstimatorConfig& config() const { return cfg_; }
  std::uint64_t dataset_hash() const { return dataset_hash_; }
  std::uint64_t estimator_calls() const { return calls_.load(); }
  std::uint64_t cache_hits() const { return hits_.load(); }

  // True when the plugin estimator applies to the subset.
  bool uses_plugin(const FeatureSubset& s) const {
    const bool discrete = d_->all_discrete(s);
    if (cfg_.family == EstimatorFamily::Plugin && !discrete)
      throw Error("plugin estimator: continuous column supplied");
    return discrete && cfg_.family != EstimatorFamily::KSG;
  }

  bool uses_plugin_everywhere() const { return uses_plugin(FeatureSubset::all(d_->n_features())); }

  // I(S;Y). The empty set has zero information.
  MIValue joint_mi(const FeatureSubset& s) {
    s.validate(d_->n_features());
    if (s.empty()) return {0.0, EstimatorFamily::Plugin, d_->n_rows()};
    CacheKey key{dataset_hash_, config_hash_, 'J', s.sorted()};
    return cached(key, [&] { return compute_joint(key.indices); });
  }

  // I(X;Y|Z) as the chain-rule difference I(X u Z;Y) - I(Z;Y).
  double cond_mi(const FeatureSubset& x, const FeatureSubset& z) {
    if (x.empty()) throw Error("cond_mi: x must be non-empty");
    for (auto j : x)
      if (z.contains(j)) throw Error("cond_mi: x and z overlap at feature " + std::to_string(j));
    return joint_mi(x.united(z)).value - joint_mi(z).value;
  }

  // I(X_i;X_j) between two features.
  MIValue feature_mi(std::size_t i, std::size_t j) {
    FeatureSubset pair{std::min(i, j), std::max(i, j)};
    if (i == j) pair = FeatureSubset{i};
    pair.validate(d_->n_features());
    CacheKey key{dataset_hash_, config_hash_, 'F', {std::min(i, j), std::max(i, j)}};
    return cached(key, [&] {
      if (uses_plugin(pair)) {
        ColumnView a = d_->column(i), b = d_->column(j);
        return mi_plugin(std::span<const ColumnView>(&a, 1), std::span<const ColumnView>(&b, 1));
      }
      if (d_->n_rows() <= cfg_.ksg_k) throw Error("mi_ksg: N must exceed ksg_k");
      ColumnView a = prepared(i), b = prepared(j);
      return MIValue{detail::ksg_core(std::span<const ColumnView>(&a, 1), std::span<const ColumnView>(&b, 1),
                                      cfg_.ksg_k, cfg_.threads, psi_),
                     EstimatorFamily::KSG, d_->n_rows()};
    });
  }

  // H(X_j): plugin for discrete features, differential entropy otherwise.
  MIValue entropy(std::size_t j) {
    FeatureSubset one{j};
    one.validate(d_->n_features());
    CacheKey key{dataset_hash_, config_hash_, 'H', {j}};
    return cached(key, [&] {
      ColumnView c = d_->column(j);
      if (uses_plugin(one)) return MIValue{entropy_plugin(c), EstimatorFamily::Plugin, d_->n_rows()};
      return MIValue{kl_entropy(std::span<const ColumnView>(&c, 1), cfg_), EstimatorFamily::KSG,
                     d_->n_rows()};
    });
  }

  ColumnView prepared(std::size_t j) {
    std::call_once(prepared_once_, [&] {
      const std::size_t n = d_->n_rows();
      prepared_.resize(n * d_->n_features());
      for (std::size_t c = 0; c < d_->n_features(); ++c) {
        try {
          auto v = prepare_column(d_->column(c), c, cfg_, cfg_.standardize);
          std::copy(v.begin(), v.end(), prepared_.begin() + static_cast<std::ptrdiff_t>(c * n));
        } catch (const Error& e) {
          prepared_error_ = "feature " + std::to_string(c) + " ('" + d_->feature_name(c) + "'): " + e.what();
        }
      }
    });
    if (!prepared_error_.empty()) throw Error(prepared_error_);
    return ColumnView(prepared_).subspan(j * d_->n_rows(), d_->n_rows());
  }

  // Pairwise max-norm distance matrix (row-major N x N) over prepared columns.
  std::vector<double> distance_matrix(const FeatureSubset& s) {
    const std::size_t n = d_->n_rows();
    std::vector<double> dm(n * n, 0.0);
    for (auto j : s) accumulate_distance(dm, j);
    return dm;
  }

  void accumulate_distance(std::vector<double>& dm, std::size_t j) {
    const std::size_t n = d_->n_rows();
    ColumnView c = prepared(j);
    for (std::size_t a = 0; a < n; ++a) {
      double* row = dm.data() + a * n;
      const double xa = c[a];
      for (std::size_t b = 0; b < n; ++b) row[b] = std::max(row[b], std::abs(xa - c[b]));
    }
  }

  // Discrete-target estimate from a precomputed distance matrix. Agrees
  // bit-for-bit with joint_mi on the same subset.
  double mixed_from_matrix(std::span<const double> dm) {
    const std::size_t n = d_->n_rows();
    calls_.fetch_add(1);
    return detail::mixed_core(n, d_->labels(), counts_, cfg_.ksg_k, cfg_.threads, psi_,
                              [&](std::size_t i, std::vector<double>& out) {
                                std::copy_n(dm.begin() + static_cast<std::ptrdiff_t>(i * n), n, out.begin());
                              });
  }

 private:
  template <class Fn>
  MIValue cached(const CacheKey& key, Fn&& compute) {
    if (cache_) {
      if (auto v = cache_->load(key)) {
        hits_.fetch_add(1);
        return *v;
      }
    }
    calls_.fetch_add(1);
    MIValue v = compute();
    if (cache_) cache_->store(key, v);
    return v;
  }

  MIValue compute_joint(const std::vector<std::size_t>& sorted) {
    FeatureSubset s(sorted);
    if (uses_plugin(s)) {
      std::vector<ColumnView> x;
      for (auto j : sorted) x.push_back(d_->column(j));
      ColumnView y(label_col_);
      return mi_plugin(x, std::span<const ColumnView>(&y, 1));
    }
    std::vector<ColumnView> x;
    for (auto j : sorted) x.push_back(prepared(j));
    const double v = detail::mixed_core(d_->n_rows(), d_->labels(), counts_, cfg_.ksg_k, cfg_.threads, psi_,
                                        [&](std::size_t i, std::vector<double>& out) {
                                          detail::max_norm_row(x, i, out);
                                        });
    return {v, EstimatorFamily::KSG, d_->n_rows()};
  }

  const Dataset* d_;
  EstimatorConfig cfg_;
  MiCache* cache_;
  std::uint64_t dataset_hash_;
  std::uint64_t config_hash_;
  detail::DigammaTable psi_;
  std::vector<std::size_t> counts_;
  std::vector<double> label_col_;
  std::once_flag prepared_once_;
  std::vector<double> prepared_;
  std::string prepared_error_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> hits_{0};
};

inline MIValue joint_mi(const Dataset& d, const FeatureSubset& s, const EstimatorConfig& cfg) {
  if (s.empty()) throw Error("joint_mi: empty subset");
  MiEngine engine(d, cfg);
  return engine.joint_mi(s);
}

inline double cond_mi(const Dataset& d, const FeatureSubset& x, const FeatureSubset& z,
                      const EstimatorConfig& cfg) {
  MiEngine engine(d, cfg);
  return engine.cond_mi(x, z);
}

}  // namespace fsur

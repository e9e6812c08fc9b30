// Reference computations that share no code with the library estimators.
// Discrete quantities are computed straight from count tables with the
// direct p ln(p / (p_x p_y)) form rather than entropy differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "fsur/dataset.hpp"

namespace oracle {

using Row = std::vector<long>;

// Joint sample as rows of integer codes; the label is stored separately.
struct Table {
  std::vector<Row> x;  // n rows of m values
  std::vector<long> y;
  std::size_t m = 0;
};

inline Table from_dataset(const fsur::Dataset& d) {
  Table t;
  t.m = d.n_features();
  t.x.assign(d.n_rows(), Row(t.m));
  for (std::size_t j = 0; j < t.m; ++j) {
    auto c = d.column(j);
    for (std::size_t i = 0; i < d.n_rows(); ++i) t.x[i][j] = std::lround(c[i]);
  }
  for (int v : d.labels()) t.y.push_back(v);
  return t;
}

// I(A;B) between two column groups of `rows`, where each row is a vector of
// codes and A, B index into it.
inline double mi_groups(const std::vector<Row>& rows, const std::vector<std::size_t>& a,
                        const std::vector<std::size_t>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::pair<Row, Row>, double> pab;
  std::map<Row, double> pa, pb;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    Row ka, kb;
    for (auto i : a) ka.push_back(r[i]);
    for (auto i : b) kb.push_back(r[i]);
    pab[{ka, kb}] += 1.0 / n;
    pa[ka] += 1.0 / n;
    pb[kb] += 1.0 / n;
  }
  double s = 0.0;
  for (const auto& [k, p] : pab) s += p * std::log(p / (pa[k.first] * pb[k.second]));
  return s;
}

// I(X_S;Y) on a table.
inline double mi_label(const Table& t, const std::vector<std::size_t>& s) {
  if (s.empty()) return 0.0;
  std::vector<Row> rows(t.x.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (auto j : s) rows[i].push_back(t.x[i][j]);
    rows[i].push_back(t.y[i]);
  }
  std::vector<std::size_t> a(s.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = i;
  return mi_groups(rows, a, {s.size()});
}

// Closed-form MI of an explicit probability table over tuples.
struct Pmf {
  std::vector<Row> cells;
  std::vector<double> p;
};

inline double mi_pmf(const Pmf& f, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::map<Row, double> pa, pb;
  std::map<std::pair<Row, Row>, double> pab;
  for (std::size_t c = 0; c < f.cells.size(); ++c) {
    if (f.p[c] == 0.0) continue;
    Row ka, kb;
    for (auto i : a) ka.push_back(f.cells[c][i]);
    for (auto i : b) kb.push_back(f.cells[c][i]);
    pa[ka] += f.p[c];
    pb[kb] += f.p[c];
    pab[{ka, kb}] += f.p[c];
  }
  double s = 0.0;
  for (const auto& [k, p] : pab) s += p * std::log(p / (pa[k.first] * pb[k.second]));
  return s;
}

inline std::vector<std::size_t> mask_to_indices(std::uint64_t mask, const std::vector<std::size_t>& universe) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < universe.size(); ++b)
    if (mask >> b & 1) out.push_back(universe[b]);
  return out;
}

// Every inclusion-minimal subset S with I(S;Y) = I(Omega;Y) (all 2^M subsets).
inline std::vector<std::vector<std::size_t>> minimal_optimal_subsets(const Table& t, double eps = 1e-12) {
  std::vector<std::size_t> all(t.m);
  for (std::size_t j = 0; j < t.m; ++j) all[j] = j;
  const double full = mi_label(t, all);
  const std::uint64_t total = std::uint64_t{1} << t.m;
  std::vector<bool> optimal(total, false);
  for (std::uint64_t mask = 0; mask < total; ++mask)
    optimal[mask] = mi_label(t, mask_to_indices(mask, all)) >= full - eps;
  std::vector<std::vector<std::size_t>> out;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (!optimal[mask]) continue;
    bool minimal = true;
    for (std::size_t b = 0; b < t.m && minimal; ++b)
      if ((mask >> b & 1) && optimal[mask & ~(std::uint64_t{1} << b)]) minimal = false;
    if (minimal) out.push_back(mask_to_indices(mask, all));
  }
  return out;
}

// Largest R within zur (ties: lexicographically smallest sorted index list)
// with I(ur u (zur \ R);Y) >= I(ur u zur;Y) - tol, by scanning all subsets.
inline std::vector<std::size_t> brute_sred(const Table& t, const std::vector<std::size_t>& ur,
                                           std::vector<std::size_t> zur, double tol) {
  std::sort(zur.begin(), zur.end());
  auto with = [&](const std::vector<std::size_t>& extra) {
    auto s = ur;
    s.insert(s.end(), extra.begin(), extra.end());
    return s;
  };
  const double full = mi_label(t, with(zur));
  std::vector<std::size_t> best;
  bool found = false;
  const std::uint64_t total = std::uint64_t{1} << zur.size();
  for (std::uint64_t mask = 1; mask < total; ++mask) {
    auto removed = mask_to_indices(mask, zur);
    std::vector<std::size_t> kept;
    for (auto j : zur)
      if (!std::binary_search(removed.begin(), removed.end(), j)) kept.push_back(j);
    if (mi_label(t, with(kept)) < full - tol) continue;
    if (!found || removed.size() > best.size() || (removed.size() == best.size() && removed < best)) {
      best = removed;
      found = true;
    }
  }
  return best;
}

// Random discrete dataset with planted structure: base variables, copies,
// deterministic functions of earlier columns, and independent noise. The
// label depends on a random subset of the base variables, optionally flipped.
inline fsur::Dataset structured_discrete(std::uint64_t seed, std::size_t m_min = 3, std::size_t m_max = 7,
                                         std::size_t n = 96) {
  std::mt19937_64 g(seed);
  auto uni = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(g() % (hi - lo + 1));
  };
  const std::size_t m = uni(m_min, m_max);
  std::vector<std::vector<long>> cols;
  std::vector<long> card;
  const std::size_t n_base = uni(2, std::min<std::size_t>(3, m));
  for (std::size_t b = 0; b < n_base; ++b) {
    const long k = static_cast<long>(uni(2, 3));
    std::vector<long> c(n);
    for (auto& v : c) v = static_cast<long>(g() % static_cast<std::uint64_t>(k));
    cols.push_back(c);
    card.push_back(k);
  }
  while (cols.size() < m) {
    const std::size_t kind = uni(0, 3);
    const std::size_t a = uni(0, cols.size() - 1);
    const std::size_t b = uni(0, cols.size() - 1);
    std::vector<long> c(n);
    long k = 2;
    if (kind == 0) {
      c = cols[a];
      k = card[a];
    } else if (kind == 1) {
      k = std::max(card[a], card[b]);
      for (std::size_t i = 0; i < n; ++i) c[i] = (cols[a][i] + cols[b][i]) % k;
    } else if (kind == 2) {
      for (std::size_t i = 0; i < n; ++i) c[i] = cols[a][i] > 0 ? 1 : 0;
    } else {
      for (auto& v : c) v = static_cast<long>(g() % 2);
    }
    cols.push_back(c);
    card.push_back(k);
  }
  std::shuffle(cols.begin(), cols.end(), g);

  std::vector<std::size_t> drivers;
  for (std::size_t j = 0; j < m; ++j)
    if (g() % 2) drivers.push_back(j);
  if (drivers.empty()) drivers.push_back(uni(0, m - 1));
  const bool flip = g() % 3 == 0;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    long s = 0;
    for (auto j : drivers) s += cols[j][i];
    y[i] = static_cast<int>(s % 2);
    if (flip && g() % 8 == 0) y[i] = 1 - y[i];
  }
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; })) y[0] = 1 - y[0];

  fsur::Dataset::Parts p;
  p.name = "structured";
  p.n_rows = n;
  for (std::size_t j = 0; j < m; ++j) {
    p.names.push_back("F" + std::to_string(j));
    p.kinds.push_back(fsur::FeatureKind::Discrete);
    for (long v : cols[j]) p.values.push_back(static_cast<double>(v));
  }
  p.labels = y;
  return fsur::Dataset(std::move(p));
}

// Dataset whose empirical distribution equals an integer-count table: cell c
// of `cells` (last coordinate is the label) appears counts[c] times.
inline fsur::Dataset from_counts(const std::vector<Row>& cells, const std::vector<std::size_t>& counts) {
  fsur::Dataset::Parts p;
  p.name = "enumerated";
  const std::size_t m = cells.front().size() - 1;
  std::vector<std::vector<double>> cols(m);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t r = 0; r < counts[c]; ++r) {
      for (std::size_t j = 0; j < m; ++j) cols[j].push_back(static_cast<double>(cells[c][j]));
      p.labels.push_back(static_cast<int>(cells[c][m]));
    }
  p.n_rows = p.labels.size();
  for (std::size_t j = 0; j < m; ++j) {
    p.names.push_back("V" + std::to_string(j));
    p.kinds.push_back(fsur::FeatureKind::Discrete);
    p.values.insert(p.values.end(), cols[j].begin(), cols[j].end());
  }
  return fsur::Dataset(std::move(p));
}

// All cells of a product space with the given cardinalities.
inline std::vector<Row> product_cells(const std::vector<long>& card) {
  std::vector<Row> out{Row{}};
  for (long k : card) {
    std::vector<Row> next;
    for (const auto& r : out)
      for (long v = 0; v < k; ++v) {
        auto q = r;
        q.push_back(v);
        next.push_back(q);
      }
    out = std::move(next);
  }
  return out;
}

// Closed-form I(X;Y) for a bivariate Gaussian with correlation rho.
inline double gaussian_mi(double rho) { return -0.5 * std::log(1.0 - rho * rho); }

}  // namespace oracle

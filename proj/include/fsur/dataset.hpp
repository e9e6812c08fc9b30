// Dataset representation, CSV ingestion, kind inference, stratified splits
// and the synthetic generators used by the oracle tests.
#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fsur/common.hpp"

namespace fsur {

enum class FeatureKind { Discrete, Continuous };

inline const char* to_string(FeatureKind k) {
  return k == FeatureKind::Discrete ? "discrete" : "continuous";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "discrete" || s == "d") return FeatureKind::Discrete;
  if (s == "continuous" || s == "c") return FeatureKind::Continuous;
  throw Error("unknown feature kind '" + std::string(s) + "'");
}

// Ordered list of distinct column indices; order is selection order.
class FeatureSubset {
 public:
  FeatureSubset() = default;
  FeatureSubset(std::initializer_list<std::size_t> idx) : indices_(idx) { check_unique(); }
  explicit FeatureSubset(std::vector<std::size_t> idx) : indices_(std::move(idx)) {
    check_unique();
  }

  static FeatureSubset all(std::size_t m) {
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    return FeatureSubset(std::move(idx));
  }

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool contains(std::size_t j) const {
    return std::find(indices_.begin(), indices_.end(), j) != indices_.end();
  }

  void push_back(std::size_t j) {
    if (contains(j)) throw Error("duplicate feature index " + std::to_string(j));
    indices_.push_back(j);
  }

  FeatureSubset without(std::size_t j) const {
    std::vector<std::size_t> out;
    out.reserve(indices_.size());
    for (auto i : indices_)
      if (i != j) out.push_back(i);
    return FeatureSubset(std::move(out));
  }

  // Union preserving this subset's order followed by new members of `other`.
  FeatureSubset united(const FeatureSubset& other) const {
    FeatureSubset out = *this;
    for (auto j : other)
      if (!out.contains(j)) out.indices_.push_back(j);
    return out;
  }

  std::vector<std::size_t> sorted() const {
    auto s = indices_;
    std::sort(s.begin(), s.end());
    return s;
  }

  void validate(std::size_t m) const {
    for (auto j : indices_)
      if (j >= m)
        throw Error("feature index " + std::to_string(j) + " out of range [0, " +
                    std::to_string(m) + ")");
  }

  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;

 private:
  void check_unique() const {
    std::unordered_set<std::size_t> seen;
    for (auto j : indices_)
      if (!seen.insert(j).second) throw Error("duplicate feature index " + std::to_string(j));
  }

  std::vector<std::size_t> indices_;
};

// Immutable labelled sample matrix. Features are stored column-major.
class Dataset {
 public:
  struct Parts {
    std::string name;
    std::size_t n_rows = 0;
    std::vector<double> values;  // column-major, n_rows * names.size()
    std::vector<FeatureKind> kinds;
    std::vector<std::string> names;
    std::vector<int> labels;
    std::vector<double> label_values;  // original value of each class code
    std::string label_name = "class";
    std::vector<std::size_t> row_ids;  // provenance; defaults to 0..N-1
  };

  explicit Dataset(Parts p) : p_(std::move(p)) {
    if (p_.row_ids.empty()) {
      p_.row_ids.resize(p_.n_rows);
      for (std::size_t i = 0; i < p_.n_rows; ++i) p_.row_ids[i] = i;
    }
    if (p_.label_values.empty()) {
      int mx = -1;
      for (int y : p_.labels) mx = std::max(mx, y);
      for (int c = 0; c <= mx; ++c) p_.label_values.push_back(c);
    }
    validate();
  }

  const std::string& name() const { return p_.name; }
  std::size_t n_rows() const { return p_.n_rows; }
  std::size_t n_features() const { return p_.names.size(); }
  std::size_t n_classes() const { return p_.label_values.size(); }
  ColumnView column(std::size_t j) const {
    return ColumnView(p_.values).subspan(j * p_.n_rows, p_.n_rows);
  }
  double at(std::size_t row, std::size_t col) const { return p_.values[col * p_.n_rows + row]; }
  FeatureKind kind(std::size_t j) const { return p_.kinds[j]; }
  const std::vector<FeatureKind>& kinds() const { return p_.kinds; }
  const std::vector<std::string>& names() const { return p_.names; }
  const std::string& feature_name(std::size_t j) const { return p_.names[j]; }
  const std::vector<int>& labels() const { return p_.labels; }
  const std::vector<double>& label_values() const { return p_.label_values; }
  const std::string& label_name() const { return p_.label_name; }
  const std::vector<std::size_t>& row_ids() const { return p_.row_ids; }

  std::optional<std::size_t> find_feature(std::string_view name) const {
    for (std::size_t j = 0; j < p_.names.size(); ++j)
      if (p_.names[j] == name) return j;
    return std::nullopt;
  }

  std::size_t feature_index(std::string_view name) const {
    if (auto j = find_feature(name)) return *j;
    throw Error("unknown feature '" + std::string(name) + "'");
  }

  bool all_discrete(const FeatureSubset& s) const {
    for (auto j : s)
      if (p_.kinds[j] != FeatureKind::Discrete) return false;
    return true;
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(n_classes(), 0);
    for (int y : p_.labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
  }

  // Hash over everything that can influence an estimate: shape, kinds,
  // values and labels. Names and provenance are deliberately excluded.
  std::uint64_t content_hash() const {
    Hasher h;
    h.u64(p_.n_rows).u64(n_features()).u64(n_classes());
    for (auto k : p_.kinds) h.u64(static_cast<std::uint64_t>(k));
    for (double v : p_.values) h.f64(v);
    for (int y : p_.labels) h.u64(static_cast<std::uint64_t>(y));
    return h.digest();
  }

  std::uint64_t rows_hash() const {
    auto ids = p_.row_ids;
    std::sort(ids.begin(), ids.end());
    Hasher h;
    for (auto r : ids) h.u64(r);
    return h.digest();
  }

  // Subset of rows, in the order given. Class coding is kept.
  Dataset select_rows(std::span<const std::size_t> rows, std::string suffix = {}) const {
    Parts q;
    q.name = p_.name + suffix;
    q.n_rows = rows.size();
    q.kinds = p_.kinds;
    q.names = p_.names;
    q.label_values = p_.label_values;
    q.label_name = p_.label_name;
    q.values.resize(rows.size() * n_features());
    for (std::size_t j = 0; j < n_features(); ++j)
      for (std::size_t i = 0; i < rows.size(); ++i)
        q.values[j * rows.size() + i] = at(rows[i], j);
    q.labels.reserve(rows.size());
    q.row_ids.reserve(rows.size());
    for (auto r : rows) {
      q.labels.push_back(p_.labels[r]);
      q.row_ids.push_back(p_.row_ids[r]);
    }
    return Dataset(std::move(q));
  }

  Dataset select_features(const FeatureSubset& s) const {
    s.validate(n_features());
    Parts q = p_;
    q.values.clear();
    q.kinds.clear();
    q.names.clear();
    for (auto j : s) {
      auto col = column(j);
      q.values.insert(q.values.end(), col.begin(), col.end());
      q.kinds.push_back(p_.kinds[j]);
      q.names.push_back(p_.names[j]);
    }
    return Dataset(std::move(q));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.p_.n_rows == b.p_.n_rows && a.p_.names == b.p_.names && a.p_.kinds == b.p_.kinds &&
           a.p_.labels == b.p_.labels && a.p_.label_values == b.p_.label_values &&
           std::equal(a.p_.values.begin(), a.p_.values.end(), b.p_.values.begin(),
                      b.p_.values.end(), [](double x, double y) {
                        return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
                      });
  }

 private:
  void validate() const {
    const std::size_t m = p_.names.size();
    if (p_.n_rows < 1) throw Error("dataset needs at least one row");
    if (m < 1) throw Error("dataset needs at least one feature");
    if (p_.kinds.size() != m) throw Error("kinds length does not match feature count");
    if (p_.values.size() != p_.n_rows * m) throw Error("value matrix has the wrong size");
    if (p_.labels.size() != p_.n_rows) throw Error("label vector has the wrong length");
    if (p_.row_ids.size() != p_.n_rows) throw Error("row id vector has the wrong length");
    if (p_.label_values.size() < 2) throw Error("single-class label");
    std::unordered_set<std::string> seen;
    for (const auto& n : p_.names)
      if (!seen.insert(n).second) throw Error("duplicate feature name '" + n + "'");
    for (int y : p_.labels)
      if (y < 0 || static_cast<std::size_t>(y) >= p_.label_values.size())
        throw Error("label code out of range");
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < p_.n_rows; ++i) {
        const double v = p_.values[j * p_.n_rows + i];
        if (!std::isfinite(v))
          throw Error("non-finite value in column '" + p_.names[j] + "'");
        if (p_.kinds[j] == FeatureKind::Discrete && !is_integral(v))
          throw Error("discrete column '" + p_.names[j] + "' holds a non-integral value");
      }
    }
  }

  Parts p_;
};

// ---------------------------------------------------------------------------
// Kind inference.

inline FeatureKind infer_kind(ColumnView col) {
  const std::size_t threshold =
      std::max<std::size_t>(20, static_cast<std::size_t>(std::floor(std::sqrt(col.size()))));
  std::unordered_set<double> distinct;
  for (double v : col) {
    if (!is_integral(v)) return FeatureKind::Continuous;
    distinct.insert(v);
    if (distinct.size() > threshold) return FeatureKind::Continuous;
  }
  return FeatureKind::Discrete;
}

// `features` is column-major with n_rows rows.
inline std::vector<FeatureKind> infer_kinds(std::span<const double> features, std::size_t n_rows) {
  std::vector<FeatureKind> kinds;
  if (n_rows == 0) return kinds;
  for (std::size_t off = 0; off + n_rows <= features.size(); off += n_rows)
    kinds.push_back(infer_kind(features.subspan(off, n_rows)));
  return kinds;
}

// ---------------------------------------------------------------------------
// CSV.

namespace detail {

inline std::vector<std::string> split_csv_record(std::istream& in, std::size_t& line_no,
                                                 bool& ok) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  ok = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // CRLF tolerated.
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      ok = true;
      return fields;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
  if (any) {
    fields.push_back(std::move(field));
    ok = true;
  }
  return fields;
}

inline std::string trim(std::string s) {
  auto issp = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

inline std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

using KindOverrides = std::map<std::string, FeatureKind>;

inline Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        const KindOverrides& kind_overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "': missing file");
  std::size_t line_no = 1;
  bool ok = false;
  auto header = detail::split_csv_record(in, line_no, ok);
  if (!ok) throw Error("'" + path.string() + "' is empty: header row missing");
  for (auto& h : header) h = detail::trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);

  std::unordered_set<std::string> seen;
  std::optional<std::size_t> label_pos;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) throw Error("missing header name in column " + std::to_string(c + 1));
    if (!seen.insert(header[c]).second) throw Error("duplicate header name '" + header[c] + "'");
    if (header[c] == label_column) label_pos = c;
  }
  if (!label_pos) throw Error("label column '" + label_column + "' not found");
  for (const auto& [name, kind] : kind_overrides)
    if (!seen.count(name) || name == label_column)
      throw Error("kind override names unknown feature '" + name + "'");

  const std::size_t n_cols = header.size();
  std::vector<std::vector<double>> cols(n_cols);
  std::size_t row = 0;
  while (true) {
    const std::size_t record_line = line_no;
    auto fields = detail::split_csv_record(in, line_no, ok);
    if (!ok) break;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;  // blank line
    if (fields.size() != n_cols)
      throw Error("line " + std::to_string(record_line) + ": expected " + std::to_string(n_cols) +
                  " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < n_cols; ++c) {
      auto v = detail::parse_number(fields[c]);
      if (!v)
        throw Error("non-numeric cell at row " + std::to_string(row + 1) + ", column '" +
                    header[c] + "': '" + fields[c] + "'");
      cols[c].push_back(*v);
    }
    ++row;
  }
  if (row == 0) throw Error("'" + path.string() + "' has no data rows");

  Dataset::Parts p;
  p.name = path.stem().string();
  p.n_rows = row;
  p.label_name = label_column;
  const auto& raw_labels = cols[*label_pos];
  std::set<double> distinct(raw_labels.begin(), raw_labels.end());
  if (distinct.size() < 2) throw Error("single-class label");
  p.label_values.assign(distinct.begin(), distinct.end());
  std::map<double, int> code;
  for (std::size_t i = 0; i < p.label_values.size(); ++i)
    code[p.label_values[i]] = static_cast<int>(i);
  for (double v : raw_labels) p.labels.push_back(code.at(v));

  for (std::size_t c = 0; c < n_cols; ++c) {
    if (c == *label_pos) continue;
    p.names.push_back(header[c]);
    auto it = kind_overrides.find(header[c]);
    p.kinds.push_back(it != kind_overrides.end() ? it->second : infer_kind(cols[c]));
    p.values.insert(p.values.end(), cols[c].begin(), cols[c].end());
  }
  return Dataset(std::move(p));
}

// Label is emitted last with its original values.
inline void write_csv(const Dataset& d, std::ostream& out) {
  for (std::size_t j = 0; j < d.n_features(); ++j) out << detail::quote_csv(d.feature_name(j)) << ',';
  out << detail::quote_csv(d.label_name()) << '\n';
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t j = 0; j < d.n_features(); ++j) out << detail::format_double(d.at(i, j)) << ',';
    out << detail::format_double(d.label_values()[static_cast<std::size_t>(d.labels()[i])]) << '\n';
  }
}

inline void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(d, out);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Splits.

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_frac > 0 && val_frac > 0 && test_frac > 0))
      throw Error("split fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
      throw Error("split fractions must sum to 1");
  }
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

namespace detail {

// Largest-remainder allocation of `total` items over groups proportional to
// `sizes`; ties go to the lower group index.
inline std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  std::vector<std::size_t> out(sizes.size(), 0);
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double quota = static_cast<double>(sizes[g]) * static_cast<double>(total) / static_cast<double>(n);
    out[g] = static_cast<std::size_t>(std::floor(quota));
    assigned += out[g];
    rema.emplace_back(quota - std::floor(quota), g);
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < rema.size(); ++r) {
    ++out[rema[r].second];
    ++assigned;
  }
  return out;
}

}  // namespace detail

// Stratified shuffle split. Validation and test sizes are floor(N * frac);
// the remainder goes to train. Rows inside each split keep source order.
inline DatasetSplit split_dataset(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = d.n_rows();
  const std::size_t n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val_frac));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_frac));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
    throw Error("dataset too small for the requested split");

  const auto counts = d.class_counts();
  const auto val_alloc = detail::apportion(counts, n_val);
  const auto test_alloc = detail::apportion(counts, n_test);

  std::vector<std::vector<std::size_t>> by_class(d.n_classes());
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(d.labels()[i])].push_back(i);

  Rng rng(spec.seed);
  std::vector<std::size_t> tr, va, te;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto rows = by_class[c];
    rng.shuffle(rows);
    if (val_alloc[c] + test_alloc[c] > rows.size())
      throw Error("class too small to stratify");
    std::size_t pos = 0;
    for (std::size_t k = 0; k < val_alloc[c]; ++k) va.push_back(rows[pos++]);
    for (std::size_t k = 0; k < test_alloc[c]; ++k) te.push_back(rows[pos++]);
    while (pos < rows.size()) tr.push_back(rows[pos++]);
  }
  auto classes_in = [&](const std::vector<std::size_t>& rows) {
    std::set<int> s;
    for (auto r : rows) s.insert(d.labels()[r]);
    return s.size();
  };
  if (classes_in(tr) < 2 || classes_in(va) < 2 || classes_in(te) < 2)
    throw Error("class too small to stratify");
  std::sort(tr.begin(), tr.end());
  std::sort(va.begin(), va.end());
  std::sort(te.begin(), te.end());
  return {d.select_rows(tr, ":train"), d.select_rows(va, ":val"), d.select_rows(te, ":test")};
}

// ---------------------------------------------------------------------------
// Synthetic generators.

// X1, X2 uniform binary, Y = X1 xor X2, each cell repeated n_per_cell times,
// plus n_noise independent fair binary columns.
inline Dataset synth_xor(std::size_t n_noise, std::size_t n_per_cell, std::uint64_t seed) {
  if (n_per_cell < 1) throw Error("n_per_cell must be at least 1");
  const std::size_t n = 4 * n_per_cell;
  Dataset::Parts p;
  p.name = "xor";
  p.n_rows = n;
  p.names = {"X1", "X2"};
  for (std::size_t k = 0; k < n_noise; ++k) p.names.push_back("N" + std::to_string(k + 1));
  p.kinds.assign(p.names.size(), FeatureKind::Discrete);
  p.values.resize(n * p.names.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = i / n_per_cell;
    const int x1 = static_cast<int>(cell >> 1);
    const int x2 = static_cast<int>(cell & 1);
    p.values[i] = x1;
    p.values[n + i] = x2;
    p.labels.push_back(x1 ^ x2);
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < n_noise; ++k)
    for (std::size_t i = 0; i < n; ++i) p.values[(2 + k) * n + i] = static_cast<double>(rng.next() >> 63);
  return Dataset(std::move(p));
}

// Balanced binary Y (row order shuffled by seed); every feature is a copy of Y.
inline Dataset synth_duplicate(std::size_t n_copies, std::size_t n_rows, std::uint64_t seed) {
  if (n_copies < 2) throw Error("n_copies must be at least 2");
  if (n_rows < 2 || n_rows % 2 != 0) throw Error("n_rows must be even and positive");
  std::vector<int> y(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) y[i] = i < n_rows / 2 ? 0 : 1;
  Rng rng(seed);
  rng.shuffle(y);
  Dataset::Parts p;
  p.name = "duplicate";
  p.n_rows = n_rows;
  for (std::size_t k = 0; k < n_copies; ++k) {
    p.names.push_back("X" + std::to_string(k + 1));
    p.kinds.push_back(FeatureKind::Discrete);
    for (int v : y) p.values.push_back(v);
  }
  p.labels = y;
  return Dataset(std::move(p));
}

// Bivariate Gaussian (x, y) with correlation rho; label is the sign of x + y.
inline Dataset synth_gaussian(std::size_t n_rows, double rho, std::uint64_t seed) {
  if (n_rows < 2) throw Error("n_rows must be at least 2");
  if (!(rho > -1.0 && rho < 1.0)) throw Error("rho must lie in (-1, 1)");
  Rng rng(seed);
  Dataset::Parts p;
  p.name = "gaussian";
  p.n_rows = n_rows;
  p.names = {"x", "y"};
  p.kinds = {FeatureKind::Continuous, FeatureKind::Continuous};
  p.values.resize(2 * n_rows);
  const double s = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    p.values[i] = a;
    p.values[n_rows + i] = rho * a + s * b;
    p.labels.push_back(p.values[i] + p.values[n_rows + i] > 0 ? 1 : 0);
  }
  bool both = std::find(p.labels.begin(), p.labels.end(), 0) != p.labels.end() &&
              std::find(p.labels.begin(), p.labels.end(), 1) != p.labels.end();
  if (!both) p.labels[0] = 1 - p.labels[0];
  return Dataset(std::move(p));
}

}  // namespace fsur

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "swarmxai/common.hpp"

namespace swarmxai {

/// Labelled tabular classification data. Immutable once validated.
struct Dataset {
  Matrix features;
  Labels labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t n_rows() const noexcept { return features.rows(); }
  std::size_t n_features() const noexcept { return features.cols(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }

  /// Rows per class id.
  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(n_classes(), 0);
    for (ClassId y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
  }

  std::vector<std::size_t> rows_of_class(ClassId c) const {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (labels[r] == c) idx.push_back(r);
    }
    return idx;
  }

  /// Row subset; class ids and names are kept so splits share one label space.
  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features = features.select_rows(rows);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(labels[r]);
    out.feature_names = feature_names;
    out.class_names = class_names;
    return out;
  }

  Dataset with_features(std::span<const std::size_t> cols) const {
    Dataset out;
    out.features = features.select_cols(cols);
    out.labels = labels;
    for (std::size_t c : cols) out.feature_names.push_back(feature_names[c]);
    out.class_names = class_names;
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws DataError unless the dataset satisfies its structural invariants.
/// `require_all_classes` is relaxed for subsets produced by splitting.
inline void validate(const Dataset& ds, bool require_all_classes = true) {
  if (ds.labels.size() != ds.n_rows()) throw DataError("label count does not match row count");
  if (ds.feature_names.size() != ds.n_features()) {
    throw DataError("feature name count does not match column count");
  }
  std::set<std::string> seen;
  for (const auto& name : ds.feature_names) {
    if (!seen.insert(name).second) throw DataError("duplicate feature name '" + name + "'");
  }
  for (double v : ds.features.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  std::vector<bool> present(ds.n_classes(), false);
  for (ClassId y : ds.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= ds.n_classes()) {
      throw DataError("label id " + std::to_string(y) + " out of range");
    }
    present[static_cast<std::size_t>(y)] = true;
  }
  if (require_all_classes) {
    for (std::size_t c = 0; c < present.size(); ++c) {
      if (!present[c]) throw DataError("class '" + ds.class_names[c] + "' has no rows");
    }
  }
}

namespace detail {

// RFC-4180 style field splitter: quoted fields, doubled quotes, no embedded newlines.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses CSV text. An empty `label_column` selects the last column.
inline Dataset parse_csv(std::istream& in, const std::string& label_column = {}) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = std::string(detail::trim(h));
  if (header.size() < 2) throw DataError("need at least one feature column and a label column");

  std::size_t label_idx = header.size() - 1;
  if (!label_column.empty()) {
    auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw DataError("label column '" + label_column + "' not found");
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx) ds.feature_names.push_back(header[c]);
  }
  std::set<std::string> seen;
  for (const auto& name : ds.feature_names) {
    if (!seen.insert(name).second) throw DataError("duplicate feature name '" + name + "'");
  }

  std::map<std::string, ClassId> class_ids;
  std::vector<double> values;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) continue;
      auto v = detail::parse_double(fields[c]);
      if (!v) {
        throw DataError("row " + std::to_string(row + 1) + " (line " + std::to_string(line_no) +
                        "), column '" + header[c] + "': cannot parse '" + fields[c] +
                        "' as a number");
      }
      values.push_back(*v);
    }
    std::string label(detail::trim(fields[label_idx]));
    if (label.empty()) {
      throw DataError("row " + std::to_string(row + 1) + ": missing label");
    }
    auto [it, inserted] = class_ids.try_emplace(label, static_cast<ClassId>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(label);
    ds.labels.push_back(it->second);
    ++row;
  }
  if (ds.class_names.size() < 2) {
    throw DataError("need at least 2 classes, found " + std::to_string(ds.class_names.size()));
  }
  ds.features = Matrix(row, ds.feature_names.size(), std::move(values));
  validate(ds);
  return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& label_column = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return parse_csv(in, label_column);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Writes features followed by a trailing label column named `label_name`.
inline void write_csv(std::ostream& out, const Dataset& ds, const std::string& label_name = "label") {
  for (const auto& name : ds.feature_names) out << detail::quote_csv(name) << ',';
  out << detail::quote_csv(label_name) << '\n';
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (double v : ds.features.row(r)) out << detail::format_double(v) << ',';
    out << detail::quote_csv(ds.class_names[static_cast<std::size_t>(ds.labels[r])]) << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& ds, const std::string& label_name = "label") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, ds, label_name);
}

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Per-class shuffled split; each class contributes round(n_c * fraction) test
/// rows, clamped so both sides keep at least one row of every class. Both
/// halves keep the original row order.
inline Split stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<bool> in_test(ds.n_rows(), false);
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    auto rows = ds.rows_of_class(static_cast<ClassId>(c));
    if (rows.size() < 2) {
      throw DataError("class '" + ds.class_names[c] + "' has fewer than 2 rows; cannot split");
    }
    rng.shuffle(rows);
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) in_test[rows[i]] = true;
  }
  Split s;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) (in_test[r] ? s.test_rows : s.train_rows).push_back(r);
  s.train = ds.subset(s.train_rows);
  s.test = ds.subset(s.test_rows);
  return s;
}

/// Fold id per row for stratified k-fold CV. Within a class, shuffled rows are
/// dealt round-robin starting where the previous class stopped, which keeps
/// fold sizes within one row of each other.
inline std::vector<std::size_t> stratified_folds(const Dataset& ds, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("need at least 2 folds");
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < folds) {
      throw DataError("fold count " + std::to_string(folds) + " exceeds size of class '" +
                      ds.class_names[c] + "' (" + std::to_string(counts[c]) + " rows)");
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> fold_of(ds.n_rows(), 0);
  std::size_t cursor = 0;
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    auto rows = ds.rows_of_class(static_cast<ClassId>(c));
    rng.shuffle(rows);
    for (std::size_t r : rows) fold_of[r] = cursor++ % folds;
  }
  return fold_of;
}

struct PreprocessReport {
  std::vector<std::size_t> shifted_features;
  double epsilon = 1.0;
  friend bool operator==(const PreprocessReport&, const PreprocessReport&) = default;
};

/// Adds `epsilon` to every value of each column holding an exact zero, so a
/// multiplicative perturbation can move it.
inline std::pair<Dataset, PreprocessReport> shift_zero_features(const Dataset& ds, double epsilon) {
  if (!(epsilon > 0.0)) throw DataError("epsilon must be positive");
  PreprocessReport report{{}, epsilon};
  Dataset out = ds;
  for (std::size_t c = 0; c < ds.n_features(); ++c) {
    bool has_zero = false;
    for (std::size_t r = 0; r < ds.n_rows() && !has_zero; ++r) has_zero = ds.features(r, c) == 0.0;
    if (!has_zero) continue;
    report.shifted_features.push_back(c);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) out.features(r, c) += epsilon;
  }
  return {std::move(out), std::move(report)};
}

/// Applies an existing report's shift (e.g. one computed on the full data).
inline Dataset apply_shift(const Dataset& ds, const PreprocessReport& report) {
  Dataset out = ds;
  for (std::size_t c : report.shifted_features) {
    for (std::size_t r = 0; r < ds.n_rows(); ++r) out.features(r, c) += report.epsilon;
  }
  return out;
}

struct Histogram {
  std::size_t feature_index = 0;
  std::optional<ClassId> class_id;  // nullopt = all classes
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Equal-width histogram over [min, max] of the selected rows. A constant
/// column gets edges [v - 0.5, v + 0.5] so the edges stay strictly increasing.
inline Histogram histogram(const Dataset& ds, std::size_t feature, std::optional<ClassId> class_filter,
                           std::size_t bins) {
  if (bins < 1) throw DataError("histogram needs at least one bin");
  if (feature >= ds.n_features()) throw DataError("feature index out of range");
  std::vector<double> values;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    if (!class_filter || ds.labels[r] == *class_filter) values.push_back(ds.features(r, feature));
  }
  if (values.empty()) throw DataError("histogram over an empty class selection");
  auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  double lo = *mn_it;
  double hi = *mx_it;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.feature_index = feature;
  h.class_id = class_filter;
  h.bin_edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.bin_edges[b] = lo + width * static_cast<double>(b);
  h.bin_edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

}  // namespace swarmxai

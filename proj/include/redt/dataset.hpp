#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "random.hpp"

namespace redt {

// Column layout and encodings of a loaded CSV. Travels with fitted trees so
// that prediction inputs are encoded exactly as the training data was.
struct Schema {
  std::vector<std::string> feature_names;
  std::string label_column;
  // Class value for each encoded label index.
  std::vector<std::string> class_names;
  // Categorical column -> category values, index = integer code.
  std::map<std::string, std::vector<std::string>> categorical;

  std::size_t n_classes() const { return class_names.size(); }
};

inline void to_json(nlohmann::json& j, const Schema& s) {
  j = nlohmann::json{{"feature_names", s.feature_names},
                     {"label_column", s.label_column},
                     {"class_names", s.class_names},
                     {"categorical", s.categorical}};
}

inline void from_json(const nlohmann::json& j, Schema& s) {
  j.at("feature_names").get_to(s.feature_names);
  j.at("label_column").get_to(s.label_column);
  j.at("class_names").get_to(s.class_names);
  j.at("categorical").get_to(s.categorical);
}

// Immutable n x D feature matrix (row-major) with class indices in [0, K).
class Dataset {
 public:
  Dataset(std::vector<double> features, std::size_t n_features,
          std::vector<int> labels, std::size_t n_classes, Schema schema = {})
      : features_(std::move(features)),
        labels_(std::move(labels)),
        n_features_(n_features),
        n_classes_(n_classes),
        schema_(std::move(schema)) {
    if (n_classes_ < 2) throw DataError("dataset needs at least 2 classes");
    if (n_features_ == 0) throw DataError("dataset has no feature columns");
    if (features_.size() != labels_.size() * n_features_)
      throw DataError("feature matrix size does not match n x D");
    for (int y : labels_)
      if (y < 0 || static_cast<std::size_t>(y) >= n_classes_)
        throw DataError("label index " + std::to_string(y) + " outside [0, " +
                        std::to_string(n_classes_) + ")");
    for (double v : features_)
      if (!std::isfinite(v)) throw DataError("non-finite feature value");
    if (schema_.feature_names.empty())
      for (std::size_t f = 0; f < n_features_; ++f)
        schema_.feature_names.push_back("x" + std::to_string(f));
    if (schema_.class_names.empty())
      for (std::size_t c = 0; c < n_classes_; ++c)
        schema_.class_names.push_back(std::to_string(c));
    if (schema_.feature_names.size() != n_features_ ||
        schema_.class_names.size() != n_classes_)
      throw DataError("schema does not match dataset dimensions");
    source_rows_.resize(labels_.size());
    for (std::size_t i = 0; i < source_rows_.size(); ++i) source_rows_[i] = i;
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  bool empty() const { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  double value(std::size_t i, std::size_t f) const {
    return features_[i * n_features_ + f];
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }
  std::span<const double> features() const { return features_; }
  const Schema& schema() const { return schema_; }
  const std::vector<std::string>& feature_names() const {
    return schema_.feature_names;
  }

  // Row index of sample i in the dataset this one was (transitively) carved
  // from by subset(). Identity for a freshly loaded dataset.
  std::size_t source_row(std::size_t i) const { return source_rows_[i]; }
  std::span<const std::size_t> source_rows() const { return source_rows_; }

  Dataset subset(std::span<const std::size_t> rows) const {
    std::vector<double> x;
    x.reserve(rows.size() * n_features_);
    std::vector<int> y;
    y.reserve(rows.size());
    std::vector<std::size_t> src;
    src.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= size()) throw InvalidArgument("subset row out of range");
      auto v = row(r);
      x.insert(x.end(), v.begin(), v.end());
      y.push_back(labels_[r]);
      src.push_back(source_rows_[r]);
    }
    Dataset out(std::move(x), n_features_, std::move(y), n_classes_, schema_);
    out.source_rows_ = std::move(src);
    return out;
  }

  bool has_class_count_at_least(std::size_t k) const {
    std::set<int> seen(labels_.begin(), labels_.end());
    return seen.size() >= k;
  }

 private:
  std::vector<double> features_;
  std::vector<int> labels_;
  std::size_t n_features_;
  std::size_t n_classes_;
  Schema schema_;
  std::vector<std::size_t> source_rows_;
};

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    auto rec = detail::split_record(line);
    if (!have_header) {
      t.header = std::move(rec);
      have_header = true;
      continue;
    }
    if (rec.size() != t.header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(rec.size()));
    t.rows.push_back(std::move(rec));
  }
  if (!have_header) throw DataError("no data rows");
  if (t.rows.empty()) throw DataError("no data rows");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return parse_csv(in);
}

// Label values sort numerically when every value is a number, otherwise
// lexicographically. Either way the order depends only on the value set.
inline std::vector<std::string> sorted_class_values(
    const std::vector<std::string>& raw) {
  std::set<std::string> distinct(raw.begin(), raw.end());
  std::vector<std::string> v(distinct.begin(), distinct.end());
  bool numeric = std::all_of(v.begin(), v.end(), [](const std::string& s) {
    return detail::parse_number(s).has_value();
  });
  if (numeric) {
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return *detail::parse_number(a) < *detail::parse_number(b);
    });
  }
  return v;
}

inline Dataset dataset_from_table(const CsvTable& t,
                                  const std::string& label_column,
                                  const std::vector<std::string>& categorical) {
  auto label_it = std::find(t.header.begin(), t.header.end(), label_column);
  if (label_it == t.header.end())
    throw DataError("label column '" + label_column + "' not found");
  const std::size_t label_col = label_it - t.header.begin();
  for (const auto& c : categorical) {
    if (std::find(t.header.begin(), t.header.end(), c) == t.header.end())
      throw DataError("categorical column '" + c + "' not found");
  }

  Schema schema;
  schema.label_column = label_column;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == label_col) continue;
    feature_cols.push_back(c);
    schema.feature_names.push_back(t.header[c]);
  }
  if (feature_cols.empty()) throw DataError("no feature columns");

  std::vector<std::string> raw_labels;
  raw_labels.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][label_col].empty())
      throw DataError("row " + std::to_string(r + 1) + ", column '" +
                      label_column + "': missing value");
    raw_labels.push_back(t.rows[r][label_col]);
  }
  schema.class_names = sorted_class_values(raw_labels);
  if (schema.class_names.size() < 2)
    throw DataError("label column '" + label_column +
                    "' has fewer than 2 classes");
  std::map<std::string, int> class_code;
  for (std::size_t k = 0; k < schema.class_names.size(); ++k)
    class_code[schema.class_names[k]] = static_cast<int>(k);

  std::set<std::string> cat_set(categorical.begin(), categorical.end());
  std::map<std::size_t, std::map<std::string, double>> codes;
  for (std::size_t c : feature_cols)
    if (cat_set.count(t.header[c])) {
      codes[c];
      schema.categorical[t.header[c]];
    }

  const std::size_t d = feature_cols.size();
  std::vector<double> x;
  x.reserve(t.rows.size() * d);
  std::vector<int> y;
  y.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& rec = t.rows[r];
    for (std::size_t c : feature_cols) {
      const std::string& cell = rec[c];
      auto where = [&] {
        return "row " + std::to_string(r + 1) + ", column '" + t.header[c] +
               "'";
      };
      if (cell.empty()) throw DataError(where() + ": missing value");
      if (auto it = codes.find(c); it != codes.end()) {
        auto [pos, inserted] = it->second.try_emplace(
            cell, static_cast<double>(it->second.size()));
        if (inserted) schema.categorical[t.header[c]].push_back(cell);
        x.push_back(pos->second);
      } else {
        auto v = detail::parse_number(cell);
        if (!v)
          throw DataError(where() + ": cannot parse '" + cell +
                          "' as a number");
        x.push_back(*v);
      }
    }
    y.push_back(class_code.at(rec[label_col]));
  }
  const std::size_t k = schema.class_names.size();
  return Dataset(std::move(x), d, std::move(y), k, std::move(schema));
}

// Feature columns other than `label_column` holding at least one non-empty,
// non-numeric cell, in header order.
inline std::vector<std::string> infer_categorical(const CsvTable& t,
                                                  const std::string& label_column) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == label_column) continue;
    for (const auto& rec : t.rows)
      if (c < rec.size() && !rec[c].empty() && !detail::parse_number(rec[c])) {
        out.push_back(t.header[c]);
        break;
      }
  }
  return out;
}

// Loads a headered, comma-delimited CSV. Categorical columns get integer codes
// in first-appearance order; labels get 0..K-1 by sorted distinct value.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& categorical = {}) {
  return dataset_from_table(read_csv_file(path), label_column, categorical);
}

// Rows encoded against an existing schema (for prediction). Labels are read
// when the label column is present in the file.
struct EncodedRows {
  std::size_t n_features = 0;
  std::vector<double> features;
  std::optional<std::vector<int>> labels;

  std::size_t size() const {
    return n_features ? features.size() / n_features : 0;
  }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
};

inline EncodedRows encode_with_schema(const CsvTable& t, const Schema& schema) {
  EncodedRows out;
  out.n_features = schema.feature_names.size();
  std::vector<std::size_t> cols;
  for (const auto& name : schema.feature_names) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end())
      throw DataError("feature column '" + name + "' not found");
    cols.push_back(it - t.header.begin());
  }
  std::optional<std::size_t> label_col;
  if (auto it = std::find(t.header.begin(), t.header.end(), schema.label_column);
      it != t.header.end())
    label_col = it - t.header.begin();
  if (label_col) out.labels.emplace();

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& rec = t.rows[r];
    for (std::size_t f = 0; f < cols.size(); ++f) {
      const std::string& cell = rec[cols[f]];
      const std::string& name = schema.feature_names[f];
      auto where = [&] {
        return "row " + std::to_string(r + 1) + ", column '" + name + "'";
      };
      if (cell.empty()) throw DataError(where() + ": missing value");
      if (auto it = schema.categorical.find(name);
          it != schema.categorical.end()) {
        auto pos = std::find(it->second.begin(), it->second.end(), cell);
        if (pos == it->second.end())
          throw DataError(where() + ": unknown category '" + cell + "'");
        out.features.push_back(static_cast<double>(pos - it->second.begin()));
      } else {
        auto v = detail::parse_number(cell);
        if (!v)
          throw DataError(where() + ": cannot parse '" + cell +
                          "' as a number");
        out.features.push_back(*v);
      }
    }
    if (label_col) {
      const std::string& cell = rec[*label_col];
      auto pos = std::find(schema.class_names.begin(), schema.class_names.end(),
                           cell);
      if (pos == schema.class_names.end())
        throw DataError("row " + std::to_string(r + 1) + ": unknown class '" +
                        cell + "'");
      out.labels->push_back(static_cast<int>(pos - schema.class_names.begin()));
    }
  }
  return out;
}

inline nlohmann::json metadata_json(const Dataset& ds) {
  return nlohmann::json{{"n", ds.size()},
                        {"D", ds.n_features()},
                        {"K", ds.n_classes()},
                        {"schema", ds.schema()}};
}

// ---------------------------------------------------------------------------
// Splits and folds

// Number of test rows for a split: floor(n * fraction). The 1e-9 slack keeps
// products such as 100 * 0.29 = 28.999999999999996 from rounding down.
inline std::size_t test_split_size(std::size_t n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgument("test fraction must lie in (0, 1)");
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * test_fraction + 1e-9));
}

// Returns (train rows, test rows), each in ascending order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  const std::size_t n_test = test_split_size(n, test_fraction);
  if (n_test == 0 || n_test >= n)
    throw InvalidArgument("split leaves an empty part (n=" + std::to_string(n) +
                          ")");
  Rng rng(seed);
  auto perm = rng.permutation(n);
  std::vector<std::size_t> test(perm.begin(), perm.begin() + n_test);
  std::vector<std::size_t> train(perm.begin() + n_test, perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds,
                                                    double test_fraction,
                                                    std::uint64_t seed) {
  auto [train, test] = split_indices(ds.size(), test_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

struct FoldPartition {
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;

  std::size_t n_folds() const { return folds.size(); }

  // All rows not in fold i, ascending.
  std::vector<std::size_t> complement(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < folds.size(); ++j)
      if (j != i) out.insert(out.end(), folds[j].begin(), folds[j].end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Random permutation of [0, n) chunked into M folds; the first n % M folds
// hold one extra row. With `stratify`, rows are dealt class by class from a
// shuffled order so each fold gets a near-proportional class mix (fold sizes
// still differ by at most one).
inline FoldPartition partition_folds(std::size_t n, std::size_t m,
                                     std::uint64_t seed,
                                     std::span<const int> labels = {},
                                     bool stratify = false) {
  if (m < 2) throw InvalidArgument("number of folds must be at least 2");
  if (m > n)
    throw InvalidArgument("number of folds (" + std::to_string(m) +
                          ") exceeds number of rows (" + std::to_string(n) +
                          ")");
  Rng rng(seed);
  auto perm = rng.permutation(n);
  FoldPartition p;
  p.seed = seed;
  p.folds.resize(m);
  if (stratify) {
    if (labels.size() != n)
      throw InvalidArgument("stratified folds need one label per row");
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      return labels[a] < labels[b];
    });
    for (std::size_t k = 0; k < n; ++k) p.folds[k % m].push_back(perm[k]);
  } else {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t len = n / m + (i < n % m ? 1 : 0);
      p.folds[i].assign(perm.begin() + pos, perm.begin() + pos + len);
      pos += len;
    }
  }
  for (auto& f : p.folds) std::sort(f.begin(), f.end());
  return p;
}

inline FoldPartition partition_folds(const Dataset& ds, std::size_t m,
                                     std::uint64_t seed, bool stratify = false) {
  return partition_folds(ds.size(), m, seed, ds.labels(), stratify);
}

}  // namespace redt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "labels.hpp"
#include "tree.hpp"

namespace redt {

// Soft labels keyed by sample index in [0, n). Rows may be absent until
// filled; consumers that need full coverage check complete().
class SoftLabelTable {
 public:
  SoftLabelTable() = default;
  SoftLabelTable(std::size_t n_rows, std::size_t n_classes)
      : n_rows_(n_rows),
        n_classes_(n_classes),
        values_(n_rows * n_classes, 0.0),
        present_(n_rows, 0) {}

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_classes() const { return n_classes_; }

  void set(std::size_t i, const SoftLabel& s) {
    if (i >= n_rows_)
      throw InvalidArgument("soft label index " + std::to_string(i) +
                            " out of range");
    if (s.size() != n_classes_)
      throw InvalidArgument("soft label has wrong number of classes");
    std::copy(s.components().begin(), s.components().end(),
              values_.begin() + i * n_classes_);
    present_[i] = 1;
  }

  bool contains(std::size_t i) const { return i < n_rows_ && present_[i]; }

  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * n_classes_, n_classes_};
  }

  SoftLabel at(std::size_t i) const {
    if (!contains(i))
      throw DataError("no soft label for sample " + std::to_string(i));
    auto v = (*this)[i];
    return SoftLabel(std::vector<double>(v.begin(), v.end()));
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (char p : present_) c += p;
    return c;
  }
  bool complete() const { return count() == n_rows_; }

  // Table over `rows`, reindexed to 0..rows.size()-1.
  SoftLabelTable subset(std::span<const std::size_t> rows) const {
    SoftLabelTable out(rows.size(), n_classes_);
    for (std::size_t j = 0; j < rows.size(); ++j)
      if (contains(rows[j])) out.set(j, at(rows[j]));
    return out;
  }

  // One-hot rows from the dataset labels.
  static SoftLabelTable from_hard_labels(const Dataset& ds) {
    SoftLabelTable t(ds.size(), ds.n_classes());
    for (std::size_t i = 0; i < ds.size(); ++i)
      t.set(i, SoftLabel::from_hard(to_one_hot(ds.label(i), ds.n_classes())));
    return t;
  }

  double mean_max_component() const {
    double acc = 0.0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (!present_[i]) continue;
      auto v = (*this)[i];
      acc += *std::max_element(v.begin(), v.end());
      ++c;
    }
    return c ? acc / static_cast<double>(c) : 0.0;
  }

  friend bool operator==(const SoftLabelTable&, const SoftLabelTable&) = default;

  // CSV: header `index,p_0,...,p_{K-1}`, one row per present index ascending.
  // Values use the shortest round-trip decimal form.
  void write_csv(std::ostream& os) const {
    os << "index";
    for (std::size_t k = 0; k < n_classes_; ++k) os << ",p_" << k;
    os << '\n';
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (!present_[i]) continue;
      os << i;
      for (double v : (*this)[i]) os << ',' << format_double(v);
      os << '\n';
    }
  }

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<double> values_;
  std::vector<char> present_;
};

// Parses a soft-label CSV for a dataset of n rows and K classes. With a
// temperature, each row is taken as raw teacher scores and softened by
// softmax(scores / T); otherwise each row must already be a probability
// vector (renormalized when within kRenormalizeTolerance of summing to 1).
inline SoftLabelTable parse_soft_labels(const CsvTable& t, std::size_t n_rows,
                                        std::size_t n_classes,
                                        std::optional<double> temperature) {
  if (t.header.size() != n_classes + 1)
    throw DataError("soft-label file has " +
                    std::to_string(t.header.size() - 1) +
                    " class columns, dataset has K=" +
                    std::to_string(n_classes));
  if (t.header[0] != "index")
    throw DataError("soft-label file must start with an 'index' column");
  for (std::size_t k = 0; k < n_classes; ++k)
    if (t.header[k + 1] != "p_" + std::to_string(k))
      throw DataError("soft-label column " + std::to_string(k + 1) +
                      " must be named p_" + std::to_string(k));
  SoftLabelTable table(n_rows, n_classes);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& rec = t.rows[r];
    const std::string where = "soft-label row " + std::to_string(r + 1);
    auto idx = detail::parse_number(rec[0]);
    if (!idx || *idx < 0 || *idx != std::floor(*idx))
      throw DataError(where + ": bad index '" + rec[0] + "'");
    const auto i = static_cast<std::size_t>(*idx);
    if (i >= n_rows)
      throw DataError(where + ": unknown sample index " + std::to_string(i));
    if (table.contains(i))
      throw DataError(where + ": duplicate sample index " + std::to_string(i));
    std::vector<double> v;
    for (std::size_t k = 0; k < n_classes; ++k) {
      auto x = detail::parse_number(rec[k + 1]);
      if (!x) throw DataError(where + ": cannot parse '" + rec[k + 1] + "'");
      v.push_back(*x);
    }
    try {
      table.set(i, temperature ? soften_logits(v, *temperature)
                               : SoftLabel::renormalized(std::move(v)));
    } catch (const Error& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return table;
}

inline SoftLabelTable load_external_soft_labels(
    const std::string& path, const Dataset& ds,
    std::optional<double> temperature = std::nullopt) {
  if (temperature && !(*temperature > 0.0))
    throw InvalidArgument("temperature must be positive");
  return parse_soft_labels(read_csv_file(path), ds.size(), ds.n_classes(),
                           temperature);
}

}  // namespace redt

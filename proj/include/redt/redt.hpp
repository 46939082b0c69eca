#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "grow.hpp"
#include "impurity.hpp"
#include "labels.hpp"
#include "soft_label_table.hpp"
#include "split.hpp"
#include "tree.hpp"

namespace redt {

// Class proportions of a node: the componentwise mean of its label vectors.
struct NodeProportions {
  std::vector<double> p;
};

inline double impurity(const NodeProportions& np, Criterion c) {
  return impurity(np.p, c);
}

inline NodeProportions node_proportions(std::span<const MixedLabel> labels) {
  if (labels.empty()) throw InvalidArgument("node has no samples");
  std::vector<std::vector<double>> rows;
  rows.reserve(labels.size());
  for (const auto& l : labels)
    rows.emplace_back(l.components().begin(), l.components().end());
  return {average_labels(rows)};
}

// Weighted impurity decrease of splitting `parent` into `left` and `right`.
// Each argument lists the label vectors of the samples in that node.
inline double impurity_decrease(std::span<const std::vector<double>> parent,
                                std::span<const std::vector<double>> left,
                                std::span<const std::vector<double>> right,
                                Criterion c) {
  if (left.empty() || right.empty())
    throw InvalidArgument("impurity decrease needs two non-empty children");
  if (parent.size() != left.size() + right.size())
    throw InvalidArgument("children do not partition the parent");
  const double n = static_cast<double>(parent.size());
  const auto pm = average_labels(parent), lm = average_labels(left),
             rm = average_labels(right);
  if (lm.size() != pm.size() || rm.size() != pm.size())
    throw InvalidArgument("children and parent differ in label dimension");
  // Label sums of the children must add up to the parent's.
  for (std::size_t k = 0; k < pm.size(); ++k) {
    const double want = pm[k] * n;
    const double got = lm[k] * static_cast<double>(left.size()) +
                       rm[k] * static_cast<double>(right.size());
    if (std::abs(got - want) > 1e-9 * std::max(1.0, n))
      throw InvalidArgument("children do not partition the parent");
  }
  return impurity(pm, c) -
         static_cast<double>(left.size()) / n * impurity(lm, c) -
         static_cast<double>(right.size()) / n * impurity(rm, c);
}

inline bool is_pure(std::span<const int> pseudo_labels) {
  if (pseudo_labels.empty()) throw InvalidArgument("node has no samples");
  for (int p : pseudo_labels)
    if (p != pseudo_labels.front()) return false;
  return true;
}

inline bool is_pure(std::span<const SoftLabel> labels) {
  std::vector<int> pseudo;
  pseudo.reserve(labels.size());
  for (const auto& s : labels) pseudo.push_back(pseudo_label(s));
  return is_pure(pseudo);
}

struct LabeledSample {
  std::vector<double> x;
  std::vector<double> label;  // mixed (or hard / soft) label vector
};

// Best (feature, midpoint threshold) over all features of `samples`, by the
// same routine tree induction uses. Nothing when no split has positive gain.
inline std::optional<SplitCandidate> best_split(
    std::span<const LabeledSample> samples, Criterion c) {
  if (samples.size() < 2) return std::nullopt;
  const std::size_t d = samples.front().x.size();
  const std::size_t k = samples.front().label.size();
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (s.x.size() != d || s.label.size() != k)
      throw InvalidArgument("samples differ in dimension");
    x.insert(x.end(), s.x.begin(), s.x.end());
    y.insert(y.end(), s.label.begin(), s.label.end());
  }
  TrainingView view{x, d, y, k};
  std::vector<std::size_t> rows(samples.size()), features(d);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::iota(features.begin(), features.end(), std::size_t{0});
  SplitWorkspace ws;
  return find_best_split(view, rows, features, c, ws);
}

enum class PseudoLabelSource {
  mixed,  // argmax of the mixed label; alpha = 1 reduces to hard-label purity
  soft,   // argmax of the teacher's soft label
};

struct ReDTConfig {
  std::size_t min_leaf = 5;
  double alpha = 0.2;
  Criterion criterion = Criterion::gini;
  std::optional<std::size_t> max_depth;
  PseudoLabelSource pseudo_source = PseudoLabelSource::mixed;
  std::uint64_t seed = 0;

  void validate() const {
    if (min_leaf < 1) throw InvalidArgument("min_leaf must be at least 1");
    check_alpha(alpha);
  }
};

// Mixed targets and pseudo labels for every row of `ds`.
struct MixedTargets {
  std::vector<double> targets;  // n x K
  std::vector<int> pseudo;
};

inline MixedTargets mixed_targets(const Dataset& ds, const SoftLabelTable& soft,
                                  double alpha, PseudoLabelSource source) {
  check_alpha(alpha);
  if (soft.n_classes() != ds.n_classes())
    throw DataError("soft labels have K=" + std::to_string(soft.n_classes()) +
                    ", dataset has K=" + std::to_string(ds.n_classes()));
  if (soft.n_rows() != ds.size() || !soft.complete())
    throw DataError("soft labels do not cover every training row (" +
                    std::to_string(soft.count()) + " of " +
                    std::to_string(ds.size()) + ")");
  const std::size_t k = ds.n_classes();
  MixedTargets m;
  m.targets.reserve(ds.size() * k);
  m.pseudo.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    SoftLabel s = soft.at(i);
    MixedLabel mixed = mix(to_one_hot(ds.label(i), k), s, alpha);
    m.targets.insert(m.targets.end(), mixed.components().begin(),
                     mixed.components().end());
    m.pseudo.push_back(source == PseudoLabelSource::mixed
                           ? argmax(mixed.components())
                           : pseudo_label(s));
  }
  return m;
}

// Fits a rectified decision tree on mixed labels alpha*hard + (1-alpha)*soft.
// Leaves store the mean mixed label of the rows that reach them.
inline Tree fit(const Dataset& ds, const SoftLabelTable& soft,
                const ReDTConfig& cfg, LeafMembership* membership = nullptr) {
  cfg.validate();
  if (ds.empty()) throw DataError("cannot fit a tree on an empty dataset");
  MixedTargets m = mixed_targets(ds, soft, cfg.alpha, cfg.pseudo_source);
  TrainingView view{ds.features(), ds.n_features(), m.targets, ds.n_classes()};
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  GrowOptions opt;
  opt.min_leaf = cfg.min_leaf;
  opt.max_depth = cfg.max_depth;
  opt.criterion = cfg.criterion;
  opt.seed = cfg.seed;
  Tree t = grow_tree(view, m.pseudo, std::move(rows), opt, membership);
  t.set_schema(ds.schema());
  return t;
}

// Standard hard-label decision tree (the alpha = 1 case).
inline Tree fit_standard(const Dataset& ds, ReDTConfig cfg) {
  cfg.alpha = 1.0;
  return fit(ds, SoftLabelTable::from_hard_labels(ds), cfg);
}

inline std::vector<int> predict_all(const Tree& t, const Dataset& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(t.predict(ds.row(i)));
  return out;
}

}  // namespace redt

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "impurity.hpp"

namespace redt {

// Gains closer than this are treated as equal; the earlier candidate in
// (feature index, threshold) order wins. Also the minimum gain for a split.
inline constexpr double kGainTolerance = 1e-12;

// Read-only view of a training set for induction: row-major features and one
// K-vector target per row (one-hot for hard labels, mixed labels for ReDT).
struct TrainingView {
  std::span<const double> features;
  std::size_t n_features = 0;
  std::span<const double> targets;
  std::size_t n_classes = 0;

  double x(std::size_t row, std::size_t f) const {
    return features[row * n_features + f];
  }
  std::span<const double> target(std::size_t row) const {
    return targets.subspan(row * n_classes, n_classes);
  }
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

// True when `a` should replace the incumbent `b`.
inline bool better_split(const SplitCandidate& a, const SplitCandidate& b) {
  if (a.decrease > b.decrease + kGainTolerance) return true;
  if (a.decrease < b.decrease - kGainTolerance) return false;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

// Midpoint between consecutive distinct values. Falls back to the lower value
// when the midpoint rounds up onto `hi`, so `hi` still routes right.
inline double midpoint(double lo, double hi) {
  double m = (lo + hi) / 2.0;
  if (!(m < hi)) m = lo;
  return m;
}

// Scratch buffers reused across nodes of one tree.
struct SplitWorkspace {
  std::vector<std::pair<double, std::size_t>> sorted;
  std::vector<double> parent_sums;
  std::vector<double> left_sums;
  std::vector<double> right_sums;
};

inline void accumulate_sums(const TrainingView& v,
                            std::span<const std::size_t> rows,
                            std::vector<double>& sums) {
  sums.assign(v.n_classes, 0.0);
  for (std::size_t r : rows) {
    auto t = v.target(r);
    for (std::size_t k = 0; k < v.n_classes; ++k) sums[k] += t[k];
  }
}

// Best threshold on one feature: sweeps the sorted node rows and scores each
// boundary between distinct values by the weighted impurity decrease
//   T(parent) - |L|/|N| T(L) - |R|/|N| T(R).
// Returns nothing when the feature is constant on the node. `constant` is set
// when every row shares one value.
inline std::optional<SplitCandidate> best_split_on_feature(
    const TrainingView& v, std::span<const std::size_t> rows, std::size_t f,
    Criterion crit, double parent_impurity, SplitWorkspace& ws,
    bool* constant = nullptr) {
  auto& s = ws.sorted;
  s.clear();
  for (std::size_t r : rows) s.emplace_back(v.x(r, f), r);
  std::sort(s.begin(), s.end());
  if (constant) *constant = s.front().first == s.back().first;
  if (s.front().first == s.back().first) return std::nullopt;

  const std::size_t k = v.n_classes;
  const double n = static_cast<double>(s.size());
  ws.left_sums.assign(k, 0.0);
  ws.right_sums.resize(k);
  std::optional<SplitCandidate> best;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    auto t = v.target(s[i].second);
    for (std::size_t c = 0; c < k; ++c) ws.left_sums[c] += t[c];
    if (s[i].first == s[i + 1].first) continue;
    const double nl = static_cast<double>(i + 1);
    const double nr = n - nl;
    for (std::size_t c = 0; c < k; ++c)
      ws.right_sums[c] = ws.parent_sums[c] - ws.left_sums[c];
    const double gain =
        parent_impurity - (nl / n) * impurity_from_sums(ws.left_sums, nl, crit) -
        (nr / n) * impurity_from_sums(ws.right_sums, nr, crit);
    SplitCandidate cand{f, midpoint(s[i].first, s[i + 1].first), gain};
    if (!best || better_split(cand, *best)) best = cand;
  }
  return best;
}

// Best split over `features` (any order). Returns nothing when no candidate
// has decrease > kGainTolerance.
inline std::optional<SplitCandidate> find_best_split(
    const TrainingView& v, std::span<const std::size_t> rows,
    std::span<const std::size_t> features, Criterion crit, SplitWorkspace& ws) {
  if (rows.size() < 2) return std::nullopt;
  accumulate_sums(v, rows, ws.parent_sums);
  const double parent =
      impurity_from_sums(ws.parent_sums, static_cast<double>(rows.size()), crit);
  std::optional<SplitCandidate> best;
  for (std::size_t f : features) {
    auto cand = best_split_on_feature(v, rows, f, crit, parent, ws);
    if (cand && (!best || better_split(*cand, *best))) best = cand;
  }
  if (best && best->decrease > kGainTolerance) return best;
  return std::nullopt;
}

}  // namespace redt

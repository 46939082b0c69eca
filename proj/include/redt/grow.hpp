#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "random.hpp"
#include "split.hpp"
#include "tree.hpp"

namespace redt {

struct GrowOptions {
  // A node is split only while it holds more than min_leaf rows.
  std::size_t min_leaf = 5;
  std::optional<std::size_t> max_depth;
  Criterion criterion = Criterion::gini;
  // Features evaluated per node; 0 or >= D evaluates all of them in index
  // order. Otherwise features are drawn without replacement in random order
  // until this many non-constant ones have been scored.
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
};

// Rows that reached each node, indexed by node id (empty for internal nodes).
using LeafMembership = std::vector<std::vector<std::size_t>>;

// Grows a tree over `rows` (duplicates allowed, e.g. a bootstrap sample).
// Splitting continues while the node has more than min_leaf rows, its rows do
// not all share one pseudo label, and some split has positive decrease.
inline Tree grow_tree(const TrainingView& view, std::span<const int> pseudo,
                      std::vector<std::size_t> rows, const GrowOptions& opt,
                      LeafMembership* membership = nullptr) {
  if (rows.empty()) throw InvalidArgument("cannot grow a tree on zero rows");
  const std::size_t d = view.n_features;
  const std::size_t k = view.n_classes;
  const bool subsample = opt.features_per_split > 0 && opt.features_per_split < d;
  Rng rng(opt.seed);
  SplitWorkspace ws;
  std::vector<std::size_t> all_features(d);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  std::vector<std::size_t> shuffled = all_features;

  auto choose_split = [&](std::span<const std::size_t> node_rows)
      -> std::optional<SplitCandidate> {
    if (!subsample)
      return find_best_split(view, node_rows, all_features, opt.criterion, ws);
    accumulate_sums(view, node_rows, ws.parent_sums);
    const double parent = impurity_from_sums(
        ws.parent_sums, static_cast<double>(node_rows.size()), opt.criterion);
    std::optional<SplitCandidate> best;
    std::size_t scored = 0;
    // Partial Fisher-Yates: draw the next feature only when it is needed.
    for (std::size_t i = 0; i < d && scored < opt.features_per_split; ++i) {
      std::size_t j = i + rng.below(d - i);
      std::swap(shuffled[i], shuffled[j]);
      bool constant = false;
      auto cand = best_split_on_feature(view, node_rows, shuffled[i],
                                        opt.criterion, parent, ws, &constant);
      if (constant) continue;
      ++scored;
      if (cand && (!best || better_split(*cand, *best))) best = cand;
    }
    if (best && best->decrease > kGainTolerance) return best;
    return std::nullopt;
  };

  struct Pending {
    std::vector<std::size_t> rows;
    std::size_t depth;
    int parent;
    bool is_left;
  };
  std::vector<TreeNode> nodes;
  std::vector<Pending> stack;
  stack.push_back({std::move(rows), 0, -1, false});
  if (membership) membership->clear();

  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (p.parent >= 0)
      (p.is_left ? nodes[p.parent].left : nodes[p.parent].right) = id;
    nodes[id].sample_count = p.rows.size();

    bool pure = true;
    for (std::size_t r : p.rows)
      if (pseudo[r] != pseudo[p.rows.front()]) {
        pure = false;
        break;
      }
    std::optional<SplitCandidate> split;
    const bool depth_ok = !opt.max_depth || p.depth < *opt.max_depth;
    if (p.rows.size() > opt.min_leaf && !pure && depth_ok)
      split = choose_split(p.rows);

    if (!split) {
      auto& logits = nodes[id].logits;
      logits.assign(k, 0.0);
      for (std::size_t r : p.rows) {
        auto t = view.target(r);
        for (std::size_t c = 0; c < k; ++c) logits[c] += t[c];
      }
      for (double& v : logits) v /= static_cast<double>(p.rows.size());
      if (membership) {
        membership->resize(nodes.size());
        (*membership)[id] = std::move(p.rows);
      }
      continue;
    }

    nodes[id].feature = static_cast<int>(split->feature);
    nodes[id].threshold = split->threshold;
    std::vector<std::size_t> left, right;
    for (std::size_t r : p.rows)
      (view.x(r, split->feature) <= split->threshold ? left : right).push_back(r);
    // Right pushed first so the left subtree is emitted next (preorder).
    stack.push_back({std::move(right), p.depth + 1, id, false});
    stack.push_back({std::move(left), p.depth + 1, id, true});
  }
  if (membership) membership->resize(nodes.size());
  return Tree(std::move(nodes), d, k);
}

}  // namespace redt

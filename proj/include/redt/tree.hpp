#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "error.hpp"
#include "labels.hpp"

namespace redt {

// One node of a fitted tree. Internal nodes route x[feature] <= threshold to
// `left`, everything else to `right`. Leaves carry the mean target vector of
// the training rows that reached them.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t sample_count = 0;
  std::vector<double> logits;  // leaves only

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Binary decision tree stored as a preorder node array (root at index 0).
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<TreeNode> nodes, std::size_t n_features,
       std::size_t n_classes)
      : nodes_(std::move(nodes)), n_features_(n_features), n_classes_(n_classes) {
    validate();
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }

  const std::optional<Schema>& schema() const { return schema_; }
  void set_schema(Schema s) { schema_ = std::move(s); }

  std::size_t leaf_index(std::span<const double> x) const {
    if (x.size() != n_features_)
      throw InvalidArgument("feature vector has " + std::to_string(x.size()) +
                            " entries, tree expects " +
                            std::to_string(n_features_));
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const double v = x[nodes_[i].feature];
      if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
      i = v <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    }
    return i;
  }

  std::span<const double> leaf_logits(std::span<const double> x) const {
    return nodes_[leaf_index(x)].logits;
  }

  SoftLabel predict_logits(std::span<const double> x) const {
    auto l = leaf_logits(x);
    return SoftLabel(std::vector<double>(l.begin(), l.end()));
  }

  int predict(std::span<const double> x) const { return argmax(leaf_logits(x)); }

  std::size_t count_nodes() const { return nodes_.size(); }

  std::size_t count_rules() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(),
                      [](const TreeNode& n) { return n.is_leaf(); }));
  }

  // Longest root-to-leaf path in edges.
  std::size_t depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes_[i].is_leaf()) {
        d[nodes_[i].left] = d[i] + 1;
        d[nodes_[i].right] = d[i] + 1;
      }
    }
    return best;
  }

  friend bool operator==(const Tree& a, const Tree& b) {
    return a.nodes_ == b.nodes_ && a.n_features_ == b.n_features_ &&
           a.n_classes_ == b.n_classes_;
  }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
      nlohmann::json j{{"count", n.sample_count}};
      if (n.is_leaf()) {
        j["logits"] = n.logits;
      } else {
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["left"] = n.left;
        j["right"] = n.right;
      }
      nodes.push_back(std::move(j));
    }
    nlohmann::json out{{"format", "redt-tree"},
                       {"version", 1},
                       {"n_features", n_features_},
                       {"n_classes", n_classes_},
                       {"nodes", std::move(nodes)}};
    if (schema_) out["schema"] = *schema_;
    return out;
  }

  static Tree from_json(const nlohmann::json& j) {
    try {
      if (j.value("format", "") != "redt-tree")
        throw DataError("not a redt-tree document");
      std::vector<TreeNode> nodes;
      for (const auto& jn : j.at("nodes")) {
        TreeNode n;
        n.sample_count = jn.at("count").get<std::size_t>();
        if (jn.contains("logits")) {
          n.logits = jn.at("logits").get<std::vector<double>>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        nodes.push_back(std::move(n));
      }
      Tree t(std::move(nodes), j.at("n_features").get<std::size_t>(),
             j.at("n_classes").get<std::size_t>());
      if (j.contains("schema")) t.set_schema(j.at("schema").get<Schema>());
      return t;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed tree JSON: ") + e.what());
    }
  }

 private:
  void validate() const {
    if (nodes_.empty()) throw DataError("tree has no nodes");
    std::vector<int> parents(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.sample_count < 1) throw DataError("tree node with zero samples");
      if (n.is_leaf()) {
        if (n.logits.size() != n_classes_ || !on_simplex(n.logits))
          throw DataError("leaf " + std::to_string(i) +
                          " logits are not a K-simplex vector");
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= n_features_)
        throw DataError("node feature index out of range");
      if (!std::isfinite(n.threshold)) throw DataError("non-finite threshold");
      for (int c : {n.left, n.right}) {
        // Preorder storage: children always follow their parent.
        if (c <= static_cast<int>(i) || c >= static_cast<int>(nodes_.size()))
          throw DataError("node " + std::to_string(i) + " has invalid child");
        ++parents[c];
      }
    }
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (parents[i] != 1) throw DataError("tree nodes do not form a tree");
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::optional<Schema> schema_;
};

// ---------------------------------------------------------------------------
// Rule export: one line per leaf, the conjunction of tests on its path.

namespace detail {

inline std::string describe_test(const Schema* schema, int feature,
                                 double threshold, bool left) {
  std::string name = schema ? schema->feature_names[feature]
                            : "x" + std::to_string(feature);
  if (schema) {
    if (auto it = schema->categorical.find(name);
        it != schema->categorical.end()) {
      std::string out = name + " in {";
      bool first = true;
      for (std::size_t code = 0; code < it->second.size(); ++code) {
        bool goes_left = static_cast<double>(code) <= threshold;
        if (goes_left != left) continue;
        if (!first) out += ", ";
        out += it->second[code];
        first = false;
      }
      return out + "}";
    }
  }
  return name + (left ? " <= " : " > ") + format_double(threshold);
}

}  // namespace detail

inline void write_rules(std::ostream& os, const Tree& tree) {
  const Schema* schema = tree.schema() ? &*tree.schema() : nullptr;
  struct Frame {
    std::size_t node;
    std::vector<std::string> terms;
  };
  std::vector<Frame> stack{{0, {}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const auto& n = tree.node(f.node);
    if (!n.is_leaf()) {
      auto right = f.terms;
      right.push_back(detail::describe_test(schema, n.feature, n.threshold, false));
      f.terms.push_back(detail::describe_test(schema, n.feature, n.threshold, true));
      stack.push_back({static_cast<std::size_t>(n.right), std::move(right)});
      stack.push_back({static_cast<std::size_t>(n.left), std::move(f.terms)});
      continue;
    }
    os << "IF ";
    if (f.terms.empty()) os << "TRUE";
    for (std::size_t i = 0; i < f.terms.size(); ++i)
      os << (i ? " AND " : "") << f.terms[i];
    const int cls = argmax(n.logits);
    os << " THEN class = "
       << (schema ? schema->class_names[cls] : std::to_string(cls)) << " [";
    for (std::size_t k = 0; k < n.logits.size(); ++k)
      os << (k ? ", " : "") << format_double(n.logits[k]);
    os << "] (n=" << n.sample_count << ")\n";
  }
}

inline std::string rules_text(const Tree& tree) {
  std::ostringstream os;
  write_rules(os, tree);
  return os.str();
}

}  // namespace redt

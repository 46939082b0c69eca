#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "grow.hpp"
#include "labels.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "tree.hpp"

namespace redt {

enum class TeacherKind { builtin_random_forest, external_file };

struct TeacherSpec {
  TeacherKind kind = TeacherKind::builtin_random_forest;
  std::size_t n_trees = 100;
  std::size_t min_leaf = 5;
  // Features scored per node; unset means floor(sqrt(D)), at least 1.
  std::optional<std::size_t> features_per_split;
  bool bootstrap = true;
  Criterion criterion = Criterion::gini;
  std::uint64_t seed = 0;
  std::optional<std::string> file_path;
  std::optional<double> temperature;
  // Worker threads for fitting trees. Never changes the fitted forest.
  std::size_t jobs = 1;

  void validate() const {
    if (n_trees < 1) throw InvalidArgument("n_trees must be at least 1");
    if (min_leaf < 1) throw InvalidArgument("min_leaf must be at least 1");
    if (features_per_split && *features_per_split < 1)
      throw InvalidArgument("features_per_split must be at least 1");
    if (kind == TeacherKind::external_file && !file_path)
      throw InvalidArgument("external teacher needs a soft-label file");
  }

  std::size_t resolved_features(std::size_t d) const {
    if (features_per_split) return std::min(*features_per_split, d);
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  }
};

inline nlohmann::json to_json(const TeacherSpec& s) {
  nlohmann::json j{
      {"kind", s.kind == TeacherKind::builtin_random_forest ? "rf" : "external"},
      {"n_trees", s.n_trees},
      {"min_leaf", s.min_leaf},
      {"bootstrap", s.bootstrap},
      {"criterion", to_string(s.criterion)},
      {"seed", s.seed}};
  j["features_per_split"] =
      s.features_per_split ? nlohmann::json(*s.features_per_split) : nlohmann::json();
  if (s.file_path) j["file_path"] = *s.file_path;
  if (s.temperature) j["temperature"] = *s.temperature;
  return j;
}

inline TeacherSpec teacher_spec_from_json(const nlohmann::json& j) {
  TeacherSpec s;
  s.kind = j.value("kind", "rf") == "rf" ? TeacherKind::builtin_random_forest
                                         : TeacherKind::external_file;
  s.n_trees = j.value("n_trees", s.n_trees);
  s.min_leaf = j.value("min_leaf", s.min_leaf);
  s.bootstrap = j.value("bootstrap", s.bootstrap);
  s.criterion = parse_criterion(j.value("criterion", "gini"));
  s.seed = j.value("seed", s.seed);
  if (j.contains("features_per_split") && !j["features_per_split"].is_null())
    s.features_per_split = j["features_per_split"].get<std::size_t>();
  if (j.contains("file_path")) s.file_path = j["file_path"].get<std::string>();
  if (j.contains("temperature")) s.temperature = j["temperature"].get<double>();
  return s;
}

// Bagged CART ensemble. Probabilities are the mean over trees of the class
// proportions in the leaf each tree routes x to.
class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<Tree> trees, std::size_t n_features,
               std::size_t n_classes)
      : trees_(std::move(trees)), n_features_(n_features), n_classes_(n_classes) {
    if (trees_.empty()) throw DataError("forest has no trees");
    for (const auto& t : trees_)
      if (t.n_features() != n_features_ || t.n_classes() != n_classes_)
        throw DataError("forest trees disagree on dimensions");
  }

  // Fits on the given rows of `ds` (all rows when `rows` is empty). Tree t
  // draws its bootstrap sample and feature subsets from streams derived from
  // (spec.seed, t) only.
  static RandomForest fit(const Dataset& ds, const TeacherSpec& spec,
                          std::span<const std::size_t> rows = {}) {
    spec.validate();
    if (spec.kind != TeacherKind::builtin_random_forest)
      throw InvalidArgument("rf_fit needs a builtin_random_forest spec");
    std::vector<std::size_t> train;
    if (rows.empty()) {
      train.resize(ds.size());
      std::iota(train.begin(), train.end(), std::size_t{0});
    } else {
      train.assign(rows.begin(), rows.end());
    }
    if (train.empty()) throw DataError("cannot fit a forest on an empty dataset");

    const std::size_t k = ds.n_classes();
    std::vector<double> targets(ds.size() * k, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i)
      targets[i * k + ds.label(i)] = 1.0;
    TrainingView view{ds.features(), ds.n_features(), targets, k};

    GrowOptions base;
    base.min_leaf = spec.min_leaf;
    base.criterion = spec.criterion;
    base.features_per_split = spec.resolved_features(ds.n_features());

    std::vector<Tree> trees(spec.n_trees);
    parallel_for(spec.n_trees, spec.jobs, [&](std::size_t t) {
      std::vector<std::size_t> sample;
      if (spec.bootstrap) {
        Rng rng(derive_seed(spec.seed, t, 0));
        sample.resize(train.size());
        for (auto& s : sample) s = train[rng.below(train.size())];
      } else {
        sample = train;
      }
      GrowOptions opt = base;
      opt.seed = derive_seed(spec.seed, t, 1);
      trees[t] = grow_tree(view, ds.labels(), std::move(sample), opt);
    });
    return RandomForest(std::move(trees), ds.n_features(), k);
  }

  SoftLabel predict_proba(std::span<const double> x) const {
    if (x.size() != n_features_)
      throw InvalidArgument("feature vector has " + std::to_string(x.size()) +
                            " entries, forest expects " +
                            std::to_string(n_features_));
    std::vector<double> p(n_classes_, 0.0);
    for (const auto& t : trees_) {
      auto l = t.leaf_logits(x);
      for (std::size_t c = 0; c < n_classes_; ++c) p[c] += l[c];
    }
    for (double& v : p) v /= static_cast<double>(trees_.size());
    return SoftLabel(std::move(p));
  }

  int predict(std::span<const double> x) const {
    return argmax(predict_proba(x).components());
  }

  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }

  std::size_t total_nodes() const {
    std::size_t n = 0;
    for (const auto& t : trees_) n += t.count_nodes();
    return n;
  }

  friend bool operator==(const RandomForest&, const RandomForest&) = default;

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"format", "redt-forest"},
            {"version", 1},
            {"n_features", n_features_},
            {"n_classes", n_classes_},
            {"trees", std::move(trees)}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    try {
      if (j.value("format", "") != "redt-forest")
        throw DataError("not a redt-forest document");
      std::vector<Tree> trees;
      for (const auto& jt : j.at("trees")) trees.push_back(Tree::from_json(jt));
      return RandomForest(std::move(trees), j.at("n_features").get<std::size_t>(),
                          j.at("n_classes").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed forest JSON: ") + e.what());
    }
  }

 private:
  std::vector<Tree> trees_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
};

inline RandomForest rf_fit(const Dataset& ds, const TeacherSpec& spec) {
  return RandomForest::fit(ds, spec);
}

inline SoftLabel rf_predict_proba(const RandomForest& forest,
                                  std::span<const double> x) {
  return forest.predict_proba(x);
}

// A teacher fits on selected rows of a dataset with a given seed and returns
// a model that maps a feature vector to class probabilities.
template <typename T>
concept ProbabilisticModel = requires(const T& m, std::span<const double> x) {
  { m.predict_proba(x) } -> std::same_as<SoftLabel>;
};

template <typename T>
concept Teacher = requires(const T& t, const Dataset& ds,
                           std::span<const std::size_t> rows, std::uint64_t seed) {
  { t.fit(ds, rows, seed) } -> ProbabilisticModel;
};

struct RandomForestTeacher {
  TeacherSpec spec;

  RandomForest fit(const Dataset& ds, std::span<const std::size_t> rows,
                   std::uint64_t seed) const {
    TeacherSpec s = spec;
    s.seed = seed;
    return RandomForest::fit(ds, s, rows);
  }
};

static_assert(Teacher<RandomForestTeacher>);

}  // namespace redt

#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "forest.hpp"
#include "labels.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "soft_label_table.hpp"

namespace redt {

struct DistillConfig {
  std::size_t folds = 5;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  bool stratified = false;
  // Per-repeat seeds. Empty means derive_seed(seed, r) for repeat r. A repeat
  // seed fixes both its fold partition and the seeds of its teachers.
  std::vector<std::uint64_t> repeat_seeds;
  // Worker threads over (repeat, fold) cells. Never changes the output.
  std::size_t jobs = 1;

  void validate() const {
    if (folds < 2) throw InvalidArgument("number of folds must be at least 2");
    if (repeats < 1) throw InvalidArgument("repeats must be at least 1");
    if (!repeat_seeds.empty() && repeat_seeds.size() != repeats)
      throw InvalidArgument("repeat_seeds must list one seed per repeat");
  }

  std::uint64_t repeat_seed(std::size_t r) const {
    return repeat_seeds.empty() ? derive_seed(seed, r) : repeat_seeds[r];
  }

  // Seed handed to the teacher trained without fold i in repeat r.
  std::uint64_t teacher_seed(std::size_t r, std::size_t i) const {
    return derive_seed(repeat_seed(r), i);
  }
};

inline nlohmann::json to_json(const DistillConfig& c) {
  return {{"folds", c.folds},
          {"repeats", c.repeats},
          {"seed", c.seed},
          {"stratified", c.stratified},
          {"repeat_seeds", c.repeat_seeds}};
}

namespace detail {

template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(ctx + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ctx + ": " + e.what());
  }
}

}  // namespace detail

// M-fold jackknife distillation. For each repeat the rows are split into M
// folds; fold i is scored by a teacher fitted on the other M-1 folds, so no
// sample's label ever comes from a teacher that saw it. The final soft label
// of each sample is the arithmetic mean over repeats.
template <Teacher T>
SoftLabelTable jackknife_distill(const Dataset& ds, const DistillConfig& cfg,
                                 const T& teacher) {
  cfg.validate();
  if (ds.empty()) throw DataError("cannot distill an empty dataset");
  const std::size_t n = ds.size();
  const std::size_t k = ds.n_classes();

  std::vector<FoldPartition> partitions;
  for (std::size_t r = 0; r < cfg.repeats; ++r)
    partitions.push_back(
        partition_folds(n, cfg.folds, cfg.repeat_seed(r), ds.labels(), cfg.stratified));

  // One n x K slab per repeat; each cell writes only its own fold's rows.
  std::vector<std::vector<double>> per_repeat(cfg.repeats,
                                              std::vector<double>(n * k, 0.0));
  const std::size_t cells = cfg.repeats * cfg.folds;
  parallel_for(cells, cfg.jobs, [&](std::size_t cell) {
    const std::size_t r = cell / cfg.folds;
    const std::size_t i = cell % cfg.folds;
    const std::string ctx =
        "repeat " + std::to_string(r) + ", fold " + std::to_string(i);
    const FoldPartition& part = partitions[r];
    const std::vector<std::size_t> train = part.complement(i);
    std::set<int> classes;
    for (std::size_t row : train) classes.insert(ds.label(row));
    if (classes.size() < 2)
      throw DataError(ctx + ": training complement contains a single class");
    auto model = detail::with_context(ctx, [&] {
      return teacher.fit(ds, train, cfg.teacher_seed(r, i));
    });
    detail::with_context(ctx, [&] {
      for (std::size_t row : part.folds[i]) {
        SoftLabel p = model.predict_proba(ds.row(row));
        if (p.size() != k) throw DataError("teacher returned wrong K");
        std::copy(p.components().begin(), p.components().end(),
                  per_repeat[r].begin() + row * k);
      }
      return 0;
    });
  });

  SoftLabelTable out(n, k);
  std::vector<double> mean(k);
  for (std::size_t row = 0; row < n; ++row) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t r = 0; r < cfg.repeats; ++r)
      for (std::size_t c = 0; c < k; ++c) mean[c] += per_repeat[r][row * k + c];
    for (double& v : mean) v /= static_cast<double>(cfg.repeats);
    out.set(row, SoftLabel(mean));
  }
  return out;
}

// Teacher fitted on every row, then asked to score those same rows. Kept as
// the overfitting baseline the jackknife is compared against.
template <Teacher T>
SoftLabelTable direct_distill(const Dataset& ds, const T& teacher,
                              std::uint64_t seed) {
  if (ds.empty()) throw DataError("cannot distill an empty dataset");
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto model = teacher.fit(ds, all, seed);
  SoftLabelTable out(ds.size(), ds.n_classes());
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.set(i, model.predict_proba(ds.row(i)));
  return out;
}

}  // namespace redt

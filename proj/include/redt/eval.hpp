#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "distill.hpp"
#include "forest.hpp"
#include "redt.hpp"
#include "soft_label_table.hpp"

namespace redt {

inline double accuracy(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size())
    throw InvalidArgument("prediction and truth lengths differ");
  if (truth.empty()) throw InvalidArgument("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// 0.0, 0.1, ..., 1.0 computed as i / 10 so every grid point is the nearest
// double to its decimal value (1.0 in particular is exact).
inline std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

// Alpha the method's authors recommend when no grid search is run.
inline constexpr double kSuggestedDefaultAlpha = 0.2;

enum class AlphaSelection {
  validation,   // alpha* from a validation split carved out of training data
  test_oracle,  // alpha* = best test accuracy over the grid
};

inline std::string_view to_string(AlphaSelection s) {
  return s == AlphaSelection::validation ? "validation" : "test_oracle";
}

inline AlphaSelection parse_alpha_selection(std::string_view s) {
  if (s == "validation") return AlphaSelection::validation;
  if (s == "test_oracle") return AlphaSelection::test_oracle;
  throw InvalidArgument("unknown alpha selection '" + std::string(s) + "'");
}

struct ExperimentConfig {
  TeacherSpec teacher;
  DistillConfig distill;
  ReDTConfig tree;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::size_t n_runs = 10;
  double test_fraction = 0.2;
  // Share of the training part held out to choose alpha in validation mode.
  double validation_fraction = 0.2;
  AlphaSelection alpha_selection = AlphaSelection::validation;
  std::uint64_t seed = 0;
  bool evaluate_teacher = true;
  // Worker threads over runs. Never changes the report.
  std::size_t jobs = 1;

  void validate() const {
    if (n_runs < 1) throw InvalidArgument("n_runs must be at least 1");
    if (alpha_grid.empty()) throw InvalidArgument("alpha grid is empty");
    for (double a : alpha_grid) check_alpha(a);
    test_split_size(2, test_fraction);
    test_split_size(2, validation_fraction);
    teacher.validate();
    distill.validate();
    tree.validate();
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json tree{{"min_leaf", c.tree.min_leaf},
                      {"criterion", to_string(c.tree.criterion)},
                      {"pseudo_labels", c.tree.pseudo_source == PseudoLabelSource::mixed
                                            ? "mixed"
                                            : "soft"}};
  tree["max_depth"] = c.tree.max_depth ? nlohmann::json(*c.tree.max_depth)
                                       : nlohmann::json();
  return {{"teacher", to_json(c.teacher)},
          {"distill", to_json(c.distill)},
          {"tree", tree},
          {"alpha_grid", c.alpha_grid},
          {"n_runs", c.n_runs},
          {"test_fraction", c.test_fraction},
          {"validation_fraction", c.validation_fraction},
          {"alpha_selection", to_string(c.alpha_selection)},
          {"seed", c.seed},
          {"evaluate_teacher", c.evaluate_teacher}};
}

// Instrumentation: every place the experiment touches data reports which
// rows (indices into the dataset passed to run_experiment) it used.
enum class Stage {
  teacher_fit,      // a teacher was trained on these rows
  selection_fit,    // a tree for alpha selection was trained on these rows
  selection_score,  // these rows scored a selection tree
  final_fit,        // a reported tree (DT, or ReDT on the grid) was trained
  test_score,       // these rows scored a reported tree
};

struct FitEvent {
  Stage stage;
  std::size_t run;
  std::optional<double> alpha;
  std::vector<std::size_t> rows;
};

using ExperimentObserver = std::function<void(const FitEvent&)>;

struct AlphaPoint {
  double alpha = 0.0;
  double test_accuracy = 0.0;
  double validation_accuracy = 0.0;
  std::size_t nodes = 0;
  std::size_t rules = 0;
  double compression_rate = 0.0;  // nodes / DT nodes
  double rule_ratio = 0.0;        // DT rules / rules
};

struct Selection {
  double best_alpha = 0.0;
  double accuracy = 0.0;
  std::size_t nodes = 0;
  std::size_t rules = 0;
};

struct RunResult {
  std::size_t run = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double dt_accuracy = 0.0;
  double redt_accuracy = 0.0;
  std::size_t dt_nodes = 0;
  std::size_t redt_nodes = 0;
  std::size_t dt_rules = 0;
  std::size_t redt_rules = 0;
  double compression_rate = 0.0;
  double rule_ratio = 0.0;
  double best_alpha = 0.0;
  // The protocol not selected in the config, for comparison.
  Selection other_selection;
  std::optional<double> teacher_accuracy;
  std::size_t teacher_nodes = 0;
  double soft_label_mean_max = 0.0;
  std::vector<AlphaPoint> curve;
};

struct ReportMeans {
  double dt_accuracy = 0.0;
  double redt_accuracy = 0.0;
  double dt_nodes = 0.0;
  double redt_nodes = 0.0;
  double dt_rules = 0.0;
  double redt_rules = 0.0;
  double compression_rate = 0.0;
  double rule_ratio = 0.0;
  double best_alpha = 0.0;
  std::optional<double> teacher_accuracy;
  double teacher_nodes = 0.0;
  double other_best_alpha = 0.0;
  double other_accuracy = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  ReportMeans means;
  std::vector<AlphaPoint> mean_curve;
};

namespace detail {

inline std::vector<std::size_t> to_source(const Dataset& ds,
                                          std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(ds.source_row(r));
  return out;
}

inline std::vector<std::size_t> all_source(const Dataset& ds) {
  return {ds.source_rows().begin(), ds.source_rows().end()};
}

// Teacher wrapper that reports the (source) rows each fit trains on.
template <Teacher T>
struct ObservedTeacher {
  const T& inner;
  const ExperimentObserver& observer;
  std::size_t run;

  auto fit(const Dataset& ds, std::span<const std::size_t> rows,
           std::uint64_t seed) const {
    if (observer) observer({Stage::teacher_fit, run, std::nullopt, to_source(ds, rows)});
    return inner.fit(ds, rows, seed);
  }
};

// Highest accuracy; ties go to fewer nodes, then to the smaller alpha.
inline std::size_t pick_best(std::span<const double> acc,
                             std::span<const std::size_t> nodes,
                             std::span<const double> alphas) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < acc.size(); ++i) {
    if (acc[i] != acc[best]) {
      if (acc[i] > acc[best]) best = i;
    } else if (nodes[i] != nodes[best]) {
      if (nodes[i] < nodes[best]) best = i;
    } else if (alphas[i] < alphas[best]) {
      best = i;
    }
  }
  return best;
}

}  // namespace detail

inline ReportMeans compute_means(const std::vector<RunResult>& runs) {
  ReportMeans m;
  const double n = static_cast<double>(runs.size());
  double teacher = 0.0;
  bool have_teacher = !runs.empty();
  for (const auto& r : runs) {
    m.dt_accuracy += r.dt_accuracy;
    m.redt_accuracy += r.redt_accuracy;
    m.dt_nodes += static_cast<double>(r.dt_nodes);
    m.redt_nodes += static_cast<double>(r.redt_nodes);
    m.dt_rules += static_cast<double>(r.dt_rules);
    m.redt_rules += static_cast<double>(r.redt_rules);
    m.compression_rate += r.compression_rate;
    m.rule_ratio += r.rule_ratio;
    m.best_alpha += r.best_alpha;
    m.teacher_nodes += static_cast<double>(r.teacher_nodes);
    m.other_best_alpha += r.other_selection.best_alpha;
    m.other_accuracy += r.other_selection.accuracy;
    if (r.teacher_accuracy) teacher += *r.teacher_accuracy;
    else have_teacher = false;
  }
  for (double* v : {&m.dt_accuracy, &m.redt_accuracy, &m.dt_nodes, &m.redt_nodes,
                    &m.dt_rules, &m.redt_rules, &m.compression_rate, &m.rule_ratio,
                    &m.best_alpha, &m.teacher_nodes, &m.other_best_alpha,
                    &m.other_accuracy})
    *v /= n;
  if (have_teacher) m.teacher_accuracy = teacher / n;
  return m;
}

inline std::vector<AlphaPoint> compute_mean_curve(const std::vector<RunResult>& runs) {
  std::vector<AlphaPoint> mean;
  if (runs.empty()) return mean;
  const double n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < runs.front().curve.size(); ++i) {
    AlphaPoint p;
    p.alpha = runs.front().curve[i].alpha;
    double nodes = 0.0, rules = 0.0;
    for (const auto& r : runs) {
      const auto& c = r.curve[i];
      p.test_accuracy += c.test_accuracy;
      p.validation_accuracy += c.validation_accuracy;
      p.compression_rate += c.compression_rate;
      p.rule_ratio += c.rule_ratio;
      nodes += static_cast<double>(c.nodes);
      rules += static_cast<double>(c.rules);
    }
    p.test_accuracy /= n;
    p.validation_accuracy /= n;
    p.compression_rate /= n;
    p.rule_ratio /= n;
    p.nodes = static_cast<std::size_t>(std::lround(nodes / n));
    p.rules = static_cast<std::size_t>(std::lround(rules / n));
    mean.push_back(p);
  }
  return mean;
}

// One repetition of the protocol: split, distill on the training part, fit DT
// and ReDT over the alpha grid, pick alpha*.
inline RunResult run_once(const Dataset& ds, const ExperimentConfig& cfg,
                          std::size_t run, const SoftLabelTable* external,
                          const ExperimentObserver& observer) {
  auto notify = [&](Stage s, std::optional<double> a, std::vector<std::size_t> rows) {
    if (observer) observer({s, run, a, std::move(rows)});
  };
  RunResult res;
  res.run = run;
  auto [train_rows, test_rows] =
      split_indices(ds.size(), cfg.test_fraction, derive_seed(cfg.seed, run, 0));
  const Dataset train = ds.subset(train_rows);
  const Dataset test = ds.subset(test_rows);
  res.n_train = train.size();
  res.n_test = test.size();

  RandomForestTeacher rf{cfg.teacher};
  rf.spec.jobs = 1;
  detail::ObservedTeacher<RandomForestTeacher> teacher{rf, observer, run};

  SoftLabelTable soft;
  if (external) {
    soft = external->subset(train_rows);
  } else {
    DistillConfig dc = cfg.distill;
    dc.seed = derive_seed(cfg.seed, run, 1);
    dc.repeat_seeds.clear();
    dc.jobs = 1;
    soft = jackknife_distill(train, dc, teacher);
  }
  res.soft_label_mean_max = soft.mean_max_component();

  if (cfg.evaluate_teacher && cfg.teacher.kind == TeacherKind::builtin_random_forest) {
    auto forest = teacher.fit(train, {}, derive_seed(cfg.seed, run, 2));
    std::vector<int> pred;
    for (std::size_t i = 0; i < test.size(); ++i) pred.push_back(forest.predict(test.row(i)));
    notify(Stage::test_score, std::nullopt, detail::all_source(test));
    res.teacher_accuracy = accuracy(pred, test.labels());
    res.teacher_nodes = forest.total_nodes();
  }

  ReDTConfig tc = cfg.tree;
  // DT reference: the alpha = 1 tree on hard labels.
  tc.alpha = 1.0;
  notify(Stage::final_fit, 1.0, detail::all_source(train));
  const Tree dt = fit(train, soft, tc);
  notify(Stage::test_score, 1.0, detail::all_source(test));
  res.dt_accuracy = accuracy(predict_all(dt, test), test.labels());
  res.dt_nodes = dt.count_nodes();
  res.dt_rules = dt.count_rules();

  auto [inner_rows, val_rows] = split_indices(train.size(), cfg.validation_fraction,
                                              derive_seed(cfg.seed, run, 3));
  const Dataset inner = train.subset(inner_rows);
  const Dataset val = train.subset(val_rows);
  const SoftLabelTable inner_soft = soft.subset(inner_rows);

  std::vector<double> val_acc, test_acc;
  std::vector<std::size_t> val_nodes, test_nodes;
  for (double a : cfg.alpha_grid) {
    tc.alpha = a;
    notify(Stage::selection_fit, a, detail::all_source(inner));
    const Tree sel = fit(inner, inner_soft, tc);
    notify(Stage::selection_score, a, detail::all_source(val));
    val_acc.push_back(accuracy(predict_all(sel, val), val.labels()));
    val_nodes.push_back(sel.count_nodes());

    notify(Stage::final_fit, a, detail::all_source(train));
    const Tree t = fit(train, soft, tc);
    notify(Stage::test_score, a, detail::all_source(test));
    AlphaPoint p;
    p.alpha = a;
    p.test_accuracy = accuracy(predict_all(t, test), test.labels());
    p.validation_accuracy = val_acc.back();
    p.nodes = t.count_nodes();
    p.rules = t.count_rules();
    p.compression_rate = static_cast<double>(p.nodes) / static_cast<double>(res.dt_nodes);
    p.rule_ratio = static_cast<double>(res.dt_rules) / static_cast<double>(p.rules);
    test_acc.push_back(p.test_accuracy);
    test_nodes.push_back(p.nodes);
    res.curve.push_back(p);
  }

  const std::size_t by_val = detail::pick_best(val_acc, val_nodes, cfg.alpha_grid);
  const std::size_t by_test = detail::pick_best(test_acc, test_nodes, cfg.alpha_grid);
  const bool use_val = cfg.alpha_selection == AlphaSelection::validation;
  const AlphaPoint& chosen = res.curve[use_val ? by_val : by_test];
  const AlphaPoint& other = res.curve[use_val ? by_test : by_val];
  res.best_alpha = chosen.alpha;
  res.redt_accuracy = chosen.test_accuracy;
  res.redt_nodes = chosen.nodes;
  res.redt_rules = chosen.rules;
  res.compression_rate = chosen.compression_rate;
  res.rule_ratio = chosen.rule_ratio;
  res.other_selection = {other.alpha, other.test_accuracy, other.nodes, other.rules};
  return res;
}

// Repeated protocol over n_runs independent train/test splits. With an
// external soft-label table (one row per dataset row) distillation is skipped
// and each run uses the rows of its training part.
inline ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg,
                                       const SoftLabelTable* external = nullptr,
                                       const ExperimentObserver& observer = {}) {
  cfg.validate();
  if (cfg.teacher.kind == TeacherKind::external_file && !external)
    throw InvalidArgument("external teacher selected but no soft-label table given");
  if (external && (external->n_rows() != ds.size() || !external->complete()))
    throw DataError("external soft labels must cover every dataset row");
  ExperimentReport rep;
  rep.config = cfg;
  rep.runs.resize(cfg.n_runs);
  parallel_for(cfg.n_runs, cfg.jobs, [&](std::size_t r) {
    rep.runs[r] = detail::with_context("run " + std::to_string(r), [&] {
      return run_once(ds, cfg, r, external, observer);
    });
  });
  rep.means = compute_means(rep.runs);
  rep.mean_curve = compute_mean_curve(rep.runs);
  return rep;
}

// Per-alpha curves only (accuracy, rules, compression), one row per alpha per
// run plus the means.
struct AlphaCurves {
  std::vector<RunResult> runs;
  std::vector<AlphaPoint> mean;
};

inline AlphaCurves alpha_curves(const Dataset& ds, const ExperimentConfig& cfg,
                                const SoftLabelTable* external = nullptr) {
  auto rep = run_experiment(ds, cfg, external);
  return {std::move(rep.runs), std::move(rep.mean_curve)};
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const AlphaPoint& p) {
  return {{"alpha", p.alpha},
          {"test_accuracy", p.test_accuracy},
          {"validation_accuracy", p.validation_accuracy},
          {"nodes", p.nodes},
          {"rules", p.rules},
          {"compression_rate", p.compression_rate},
          {"rule_ratio", p.rule_ratio},
          {"suggested_default", p.alpha == kSuggestedDefaultAlpha}};
}

inline nlohmann::json to_json(const ExperimentReport& rep) {
  const std::string other =
      std::string(to_string(rep.config.alpha_selection == AlphaSelection::validation
                                ? AlphaSelection::test_oracle
                                : AlphaSelection::validation));
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : r.curve) curve.push_back(to_json(p));
    nlohmann::json jr{{"run", r.run},
                      {"n_train", r.n_train},
                      {"n_test", r.n_test},
                      {"dt_accuracy", r.dt_accuracy},
                      {"redt_accuracy", r.redt_accuracy},
                      {"dt_nodes", r.dt_nodes},
                      {"redt_nodes", r.redt_nodes},
                      {"dt_rules", r.dt_rules},
                      {"redt_rules", r.redt_rules},
                      {"compression_rate", r.compression_rate},
                      {"rule_ratio", r.rule_ratio},
                      {"best_alpha", r.best_alpha},
                      {other,
                       {{"best_alpha", r.other_selection.best_alpha},
                        {"redt_accuracy", r.other_selection.accuracy},
                        {"redt_nodes", r.other_selection.nodes},
                        {"redt_rules", r.other_selection.rules}}},
                      {"teacher_nodes", r.teacher_nodes},
                      {"soft_label_mean_max", r.soft_label_mean_max},
                      {"curve", std::move(curve)}};
    jr["teacher_accuracy"] =
        r.teacher_accuracy ? nlohmann::json(*r.teacher_accuracy) : nlohmann::json();
    runs.push_back(std::move(jr));
  }
  const auto& m = rep.means;
  nlohmann::json means{{"dt_accuracy", m.dt_accuracy},
                       {"redt_accuracy", m.redt_accuracy},
                       {"dt_nodes", m.dt_nodes},
                       {"redt_nodes", m.redt_nodes},
                       {"dt_rules", m.dt_rules},
                       {"redt_rules", m.redt_rules},
                       {"compression_rate", m.compression_rate},
                       {"rule_ratio", m.rule_ratio},
                       {"best_alpha", m.best_alpha},
                       {"teacher_nodes", m.teacher_nodes},
                       {other,
                        {{"best_alpha", m.other_best_alpha},
                         {"redt_accuracy", m.other_accuracy}}}};
  means["teacher_accuracy"] =
      m.teacher_accuracy ? nlohmann::json(*m.teacher_accuracy) : nlohmann::json();
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : rep.mean_curve) curve.push_back(to_json(p));
  return {{"format", "redt-report"},
          {"version", 1},
          {"alpha_selection", to_string(rep.config.alpha_selection)},
          {"suggested_default_alpha", kSuggestedDefaultAlpha},
          {"config", to_json(rep.config)},
          {"means", std::move(means)},
          {"mean_curve", std::move(curve)},
          {"runs", std::move(runs)}};
}

inline void write_curves_csv(std::ostream& os, const std::vector<RunResult>& runs,
                             const std::vector<AlphaPoint>& mean) {
  os << "run,alpha,test_accuracy,validation_accuracy,nodes,rules,"
        "compression_rate,rule_ratio,suggested_default\n";
  auto row = [&](const std::string& run, const AlphaPoint& p) {
    os << run << ',' << format_double(p.alpha) << ','
       << format_double(p.test_accuracy) << ','
       << format_double(p.validation_accuracy) << ',' << p.nodes << ','
       << p.rules << ',' << format_double(p.compression_rate) << ','
       << format_double(p.rule_ratio) << ','
       << (p.alpha == kSuggestedDefaultAlpha ? 1 : 0) << '\n';
  };
  for (const auto& r : runs)
    for (const auto& p : r.curve) row(std::to_string(r.run), p);
  for (const auto& p : mean) row("mean", p);
}

inline void write_runs_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "run,n_train,n_test,dt_accuracy,redt_accuracy,dt_nodes,redt_nodes,"
        "dt_rules,redt_rules,compression_rate,rule_ratio,best_alpha,"
        "teacher_accuracy\n";
  for (const auto& r : rep.runs) {
    os << r.run << ',' << r.n_train << ',' << r.n_test << ','
       << format_double(r.dt_accuracy) << ',' << format_double(r.redt_accuracy)
       << ',' << r.dt_nodes << ',' << r.redt_nodes << ',' << r.dt_rules << ','
       << r.redt_rules << ',' << format_double(r.compression_rate) << ','
       << format_double(r.rule_ratio) << ',' << format_double(r.best_alpha) << ','
       << (r.teacher_accuracy ? format_double(*r.teacher_accuracy) : "") << '\n';
  }
}

}  // namespace redt

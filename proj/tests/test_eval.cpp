#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "redt/eval.hpp"
#include "support/fixtures.hpp"

using namespace redt;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.teacher.n_trees = 10;
  cfg.distill.repeats = 2;
  cfg.n_runs = 3;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST(Accuracy, Examples) {
  std::vector<int> a{0, 1, 2, 1};
  EXPECT_EQ(accuracy(a, a), 1.0);
  EXPECT_EQ(accuracy(a, std::vector<int>{1, 0, 0, 0}), 0.0);
  EXPECT_EQ(accuracy(a, std::vector<int>{0, 1, 2, 0}), 0.75);
  EXPECT_THROW(accuracy(a, std::vector<int>{0}), InvalidArgument);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
}

TEST(AlphaGrid, DefaultIsTenthSteps) {
  auto g = default_alpha_grid();
  ASSERT_EQ(g.size(), 11u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(g[2], 0.2);
  EXPECT_EQ(g[3], 0.3);
}

TEST(Experiment, AlphaOneGridReducesToDt) {
  auto ds = fixtures::blobs(200, 4, 3, 1);
  auto cfg = small_config();
  cfg.n_runs = 1;
  cfg.alpha_grid = {1.0};
  auto rep = run_experiment(ds, cfg);
  const auto& r = rep.runs.at(0);
  EXPECT_EQ(r.redt_accuracy, r.dt_accuracy);
  EXPECT_EQ(r.redt_nodes, r.dt_nodes);
  EXPECT_EQ(r.redt_rules, r.dt_rules);
  EXPECT_EQ(r.compression_rate, 1.0);
  EXPECT_EQ(r.rule_ratio, 1.0);
  EXPECT_EQ(r.best_alpha, 1.0);
}

TEST(Experiment, AlphaOneRowHasUnitRatiosEveryRun) {
  auto ds = fixtures::blobs(200, 4, 2, 2, 1.0);
  auto rep = run_experiment(ds, small_config());
  for (const auto& r : rep.runs) {
    ASSERT_EQ(r.curve.back().alpha, 1.0);
    EXPECT_EQ(r.curve.back().compression_rate, 1.0);
    EXPECT_EQ(r.curve.back().rule_ratio, 1.0);
    EXPECT_EQ(r.curve.back().test_accuracy, r.dt_accuracy);
  }
}

TEST(Experiment, ReportInternallyConsistent) {
  auto ds = fixtures::blobs(240, 4, 3, 3, 1.0);
  auto rep = run_experiment(ds, small_config());
  double acc = 0.0, nodes = 0.0, comp = 0.0, alpha = 0.0;
  for (const auto& r : rep.runs) {
    EXPECT_DOUBLE_EQ(r.compression_rate,
                     static_cast<double>(r.redt_nodes) / static_cast<double>(r.dt_nodes));
    EXPECT_DOUBLE_EQ(r.rule_ratio,
                     static_cast<double>(r.dt_rules) / static_cast<double>(r.redt_rules));
    EXPECT_EQ(r.redt_nodes, 2 * r.redt_rules - 1);
    auto it = std::find_if(r.curve.begin(), r.curve.end(),
                           [&](const AlphaPoint& p) { return p.alpha == r.best_alpha; });
    ASSERT_NE(it, r.curve.end());
    EXPECT_EQ(it->test_accuracy, r.redt_accuracy);
    acc += r.redt_accuracy;
    nodes += r.redt_nodes;
    comp += r.compression_rate;
    alpha += r.best_alpha;
    EXPECT_TRUE(r.teacher_accuracy.has_value());
    EXPECT_EQ(r.n_train + r.n_test, ds.size());
  }
  const double n = static_cast<double>(rep.runs.size());
  EXPECT_DOUBLE_EQ(rep.means.redt_accuracy, acc / n);
  EXPECT_DOUBLE_EQ(rep.means.redt_nodes, nodes / n);
  EXPECT_DOUBLE_EQ(rep.means.compression_rate, comp / n);
  EXPECT_DOUBLE_EQ(rep.means.best_alpha, alpha / n);
  ASSERT_EQ(rep.mean_curve.size(), 11u);
  double a2 = 0.0;
  for (const auto& r : rep.runs) a2 += r.curve[2].test_accuracy;
  EXPECT_DOUBLE_EQ(rep.mean_curve[2].test_accuracy, a2 / n);
}

TEST(Experiment, DeterministicAndJobsInvariant) {
  auto ds = fixtures::blobs(200, 4, 3, 4);
  auto cfg = small_config();
  auto a = to_json(run_experiment(ds, cfg)).dump();
  EXPECT_EQ(a, to_json(run_experiment(ds, cfg)).dump());
  cfg.jobs = 3;
  EXPECT_EQ(a, to_json(run_experiment(ds, cfg)).dump());
  cfg.jobs = 1;
  cfg.seed = 18;
  EXPECT_NE(a, to_json(run_experiment(ds, cfg)).dump());
}

TEST(Experiment, TestRowsNeverReachTrainingOrSelection) {
  auto ds = fixtures::blobs(200, 3, 2, 5, 1.0);
  auto cfg = small_config();
  std::mutex mu;
  std::map<std::size_t, std::set<std::size_t>> test_rows, touched;
  std::map<std::size_t, std::size_t> counts;
  auto observer = [&](const FitEvent& e) {
    std::lock_guard lock(mu);
    ++counts[static_cast<std::size_t>(e.stage)];
    auto& dst = e.stage == Stage::test_score ? test_rows[e.run] : touched[e.run];
    dst.insert(e.rows.begin(), e.rows.end());
  };
  run_experiment(ds, cfg, nullptr, observer);
  EXPECT_EQ(counts[static_cast<std::size_t>(Stage::teacher_fit)],
            cfg.n_runs * (cfg.distill.folds * cfg.distill.repeats + 1));
  ASSERT_EQ(test_rows.size(), cfg.n_runs);
  for (const auto& [run, rows] : test_rows) {
    EXPECT_EQ(rows.size(), test_split_size(ds.size(), cfg.test_fraction));
    for (auto r : rows) EXPECT_FALSE(touched[run].count(r)) << "run " << run << " row " << r;
  }
}

TEST(Experiment, TestLabelsDoNotInfluenceValidationChoice) {
  auto ds = fixtures::blobs(200, 3, 3, 6, 0.8);
  auto cfg = small_config();
  cfg.n_runs = 1;
  auto base = run_experiment(ds, cfg);
  auto [train, test] = split_indices(ds.size(), cfg.test_fraction, derive_seed(cfg.seed, 0, 0));
  std::vector<int> y(ds.labels().begin(), ds.labels().end());
  for (auto r : test) y[r] = (y[r] + 1) % 3;
  Dataset scrambled({ds.features().begin(), ds.features().end()}, ds.n_features(), y, 3);
  auto other = run_experiment(scrambled, cfg);
  EXPECT_EQ(base.runs[0].best_alpha, other.runs[0].best_alpha);
  EXPECT_EQ(base.runs[0].redt_nodes, other.runs[0].redt_nodes);
  EXPECT_EQ(base.runs[0].soft_label_mean_max, other.runs[0].soft_label_mean_max);
  EXPECT_NE(base.runs[0].redt_accuracy, other.runs[0].redt_accuracy);
}

TEST(Experiment, TestOracleChoosesBestTestAccuracy) {
  auto ds = fixtures::blobs(200, 3, 2, 7, 0.8);
  auto cfg = small_config();
  cfg.alpha_selection = AlphaSelection::test_oracle;
  auto rep = run_experiment(ds, cfg);
  for (const auto& r : rep.runs) {
    double best = 0.0;
    for (const auto& p : r.curve) best = std::max(best, p.test_accuracy);
    EXPECT_EQ(r.redt_accuracy, best);
    EXPECT_GE(r.redt_accuracy, r.other_selection.accuracy);
  }
  auto j = to_json(rep);
  EXPECT_EQ(j["alpha_selection"], "test_oracle");
  EXPECT_TRUE(j["runs"][0].contains("validation"));
}

TEST(Experiment, ExternalSoftLabelsSkipDistillation) {
  auto ds = fixtures::blobs(150, 3, 2, 8);
  auto soft = fixtures::random_soft(ds, 3, 2.0);
  auto cfg = small_config();
  cfg.teacher.kind = TeacherKind::external_file;
  cfg.teacher.file_path = "unused.csv";
  std::size_t teacher_fits = 0;
  auto rep = run_experiment(ds, cfg, &soft, [&](const FitEvent& e) {
    teacher_fits += e.stage == Stage::teacher_fit;
  });
  EXPECT_EQ(teacher_fits, 0u);
  EXPECT_FALSE(rep.runs[0].teacher_accuracy);
  EXPECT_FALSE(rep.means.teacher_accuracy);
  EXPECT_THROW(run_experiment(ds, cfg), InvalidArgument);
  SoftLabelTable partial(150, 2);
  EXPECT_THROW(run_experiment(ds, cfg, &partial), DataError);
}

TEST(Experiment, ErrorsCarryRunContext) {
  // Eight rows: the 20% test split leaves one row, and jackknife folds on the
  // remainder can collapse to one class.
  Dataset ds({1, 2, 3, 4, 5, 6, 7, 8}, 1, {0, 0, 0, 0, 0, 0, 0, 1}, 2);
  auto cfg = small_config();
  cfg.n_runs = 1;
  try {
    run_experiment(ds, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("run 0: ", 0), 0u) << e.what();
  }
}

TEST(Experiment, ConfigValidation) {
  auto ds = fixtures::blobs(50, 2, 2, 1);
  auto cfg = small_config();
  cfg.alpha_grid = {0.5, 1.2};
  EXPECT_THROW(run_experiment(ds, cfg), InvalidArgument);
  cfg.alpha_grid = {};
  EXPECT_THROW(run_experiment(ds, cfg), InvalidArgument);
  cfg = small_config();
  cfg.n_runs = 0;
  EXPECT_THROW(run_experiment(ds, cfg), InvalidArgument);
  cfg = small_config();
  cfg.test_fraction = 1.0;
  EXPECT_THROW(run_experiment(ds, cfg), InvalidArgument);
  EXPECT_EQ(parse_alpha_selection("validation"), AlphaSelection::validation);
  EXPECT_THROW(parse_alpha_selection("test"), InvalidArgument);
}

TEST(Report, CurvesCsvFlagsSuggestedDefault) {
  auto ds = fixtures::blobs(150, 3, 2, 9);
  auto cfg = small_config();
  cfg.n_runs = 2;
  auto curves = alpha_curves(ds, cfg);
  std::ostringstream os;
  write_curves_csv(os, curves.runs, curves.mean);
  std::istringstream in(os.str());
  auto t = parse_csv(in);
  EXPECT_EQ(t.header.front(), "run");
  EXPECT_EQ(t.header.back(), "suggested_default");
  EXPECT_EQ(t.rows.size(), 3u * 11u);
  std::size_t flagged = 0;
  for (const auto& row : t.rows)
    if (row.back() == "1") {
      ++flagged;
      EXPECT_EQ(row[1], "0.2");
    }
  EXPECT_EQ(flagged, 3u);
  for (const auto& row : t.rows)
    if (row[1] == "1") EXPECT_EQ(row[6], "1");
}

TEST(Report, JsonCarriesMeansAndRuns) {
  auto ds = fixtures::blobs(150, 3, 2, 10);
  auto rep = run_experiment(ds, small_config());
  auto j = to_json(rep);
  EXPECT_EQ(j["format"], "redt-report");
  EXPECT_EQ(j["alpha_selection"], "validation");
  EXPECT_EQ(j["suggested_default_alpha"], 0.2);
  EXPECT_EQ(j["runs"].size(), 3u);
  EXPECT_EQ(j["means"]["redt_accuracy"].get<double>(), rep.means.redt_accuracy);
  EXPECT_TRUE(j["means"].contains("test_oracle"));
  EXPECT_EQ(j["mean_curve"][2]["suggested_default"], true);
  std::ostringstream os;
  write_runs_csv(os, rep);
  std::istringstream in(os.str());
  EXPECT_EQ(parse_csv(in).rows.size(), 3u);
}

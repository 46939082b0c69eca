#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support/fixtures.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  fixtures::TempDir dir{"cli"};

  void SetUp() override {
    std::ostringstream csv;
    csv << "x1,x2,color,class\n";
    auto ds = fixtures::blobs(120, 2, 3, 5);
    const char* colors[] = {"red", "green", "blue"};
    for (std::size_t i = 0; i < ds.size(); ++i)
      csv << ds.value(i, 0) << ',' << ds.value(i, 1) << ',' << colors[(i * 7) % 3] << ",c"
          << ds.label(i) << '\n';
    fixtures::write_file(path("d.csv"), csv.str());
  }

  std::string path(const std::string& name) const { return dir.file(name); }

  Result run(const std::string& args) const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = std::string(REDT_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
    int status = std::system(cmd.c_str());
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, fixtures::read_file(out), fixtures::read_file(err)};
  }

  std::string data_flags() const {
    return "--data " + path("d.csv") + " --label class --categorical color";
  }
};

nlohmann::json error_line(const Result& r) {
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << r.err;
  return nlohmann::json::parse(r.err);
}

}  // namespace

TEST_F(Cli, DistillTrainPredictEndToEnd) {
  auto d = run("distill " + data_flags() + " --n-trees 10 --folds 5 --repeats 2 --seed 7 --out " +
               path("soft.csv"));
  ASSERT_EQ(d.code, 0) << d.err;
  auto soft = fixtures::read_file(path("soft.csv"));
  EXPECT_EQ(soft.rfind("index,p_0,p_1,p_2\n", 0), 0u);
  auto manifest = nlohmann::json::parse(fixtures::read_file(path("soft.csv.manifest.json")));
  EXPECT_EQ(manifest["command"], "distill");
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["inputs"].size(), 1u);
  EXPECT_EQ(manifest["config"]["repeats"], 2);

  auto t = run("train " + data_flags() + " --soft-labels " + path("soft.csv") +
               " --alpha 0.3 --min-leaf 3 --out " + path("tree.json"));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(std::filesystem::exists(path("tree.json.manifest.json")));

  auto p = run("predict --tree " + path("tree.json") + " --data " + path("d.csv") + " --out " +
               path("pred.csv"));
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_NE(p.out.find("accuracy"), std::string::npos);
  auto pred = fixtures::read_file(path("pred.csv"));
  EXPECT_EQ(pred.rfind("index,predicted,class,p_0,p_1,p_2\n", 0), 0u);
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 121);

  auto r = run("export-rules --tree " + path("tree.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("IF "), std::string::npos);
  auto s = run("export-tree --model " + path("tree.json") + " --format summary");
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out.rfind("tree: ", 0), 0u);
}

TEST_F(Cli, IdenticalFlagsGiveByteIdenticalOutputs) {
  for (const char* name : {"a", "b"}) {
    auto r = run("distill " + data_flags() + " --n-trees 8 --seed 3 --out " + path(std::string(name) + ".csv"));
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(fixtures::read_file(path("a.csv")), fixtures::read_file(path("b.csv")));
  auto other = run("distill " + data_flags() + " --n-trees 8 --seed 4 --out " + path("c.csv"));
  ASSERT_EQ(other.code, 0);
  EXPECT_NE(fixtures::read_file(path("a.csv")), fixtures::read_file(path("c.csv")));
}

TEST_F(Cli, JobsNeverChangeOutputs) {
  const std::string common = "eval " + data_flags() +
                             " --n-trees 8 --repeats 1 --runs 3 --alpha-grid 0,0.5,1 --seed 2";
  auto a = run("--jobs 1 " + common + " --out " + path("r1.json"));
  auto b = run("--jobs 3 " + common + " --out " + path("r3.json"));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(fixtures::read_file(path("r1.json")), fixtures::read_file(path("r3.json")));
  EXPECT_EQ(fixtures::read_file(path("r1.curves.csv")), fixtures::read_file(path("r3.curves.csv")));
  EXPECT_EQ(fixtures::read_file(path("r1.runs.csv")), fixtures::read_file(path("r3.runs.csv")));
  auto d1 = run("--jobs 1 distill " + data_flags() + " --n-trees 8 --out " + path("s1.csv"));
  auto d4 = run("distill " + data_flags() + " --n-trees 8 --jobs 4 --out " + path("s4.csv"));
  ASSERT_EQ(d1.code, 0);
  ASSERT_EQ(d4.code, 0);
  EXPECT_EQ(fixtures::read_file(path("s1.csv")), fixtures::read_file(path("s4.csv")));
  EXPECT_EQ(fixtures::read_file(path("s1.csv.manifest.json")).size(),
            fixtures::read_file(path("s4.csv.manifest.json")).size());
}

TEST_F(Cli, GridsearchWritesCurves) {
  auto r = run("gridsearch " + data_flags() +
               " --n-trees 8 --repeats 1 --runs 2 --alpha-grid 0,1 --out " + path("g.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto csv = fixtures::read_file(path("g.csv"));
  EXPECT_EQ(csv.rfind("run,alpha,test_accuracy,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 2 + 2);
}

TEST_F(Cli, GridsearchWithoutDataIsUsageError) {
  auto r = run("gridsearch --label class");
  EXPECT_EQ(r.code, 1);
  auto j = error_line(r);
  EXPECT_EQ(j["error"], "usage");
  EXPECT_NE(j["message"].get<std::string>().find("--data"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("train " + data_flags() + " --alpha 1.5 --out " + path("t.json")).code, 1);
  EXPECT_EQ(run("train " + data_flags() + " --alpha 0.5 --out " + path("t.json")).code, 1);
  EXPECT_EQ(run("distill " + data_flags() + " --folds 1").code, 1);
  EXPECT_EQ(run("distill " + data_flags() + " --method magic").code, 1);
  EXPECT_EQ(run("eval " + data_flags() + " --alpha-selection peek").code, 1);
  EXPECT_EQ(run("--jobs 0 distill " + data_flags()).code, 1);
  EXPECT_FALSE(std::filesystem::exists(path("t.json")));
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, DataErrors) {
  auto missing = run("distill --data " + path("nope.csv") + " --label class");
  EXPECT_EQ(missing.code, 2);
  EXPECT_EQ(error_line(missing)["error"], "data");
  auto bad_label = run("distill --data " + path("d.csv") + " --label missing --out " + path("x.csv"));
  EXPECT_EQ(bad_label.code, 2);
  fixtures::write_file(path("bad.csv"), "x1,x2,color,class\n1,abc,red,c0\n2,3,red,c1\n");
  auto bad_value =
      run("train --data " + path("bad.csv") + " --label class --categorical color --alpha 1");
  EXPECT_EQ(bad_value.code, 2);
  EXPECT_NE(error_line(bad_value)["message"].get<std::string>().find("row 1"), std::string::npos);
  fixtures::write_file(path("junk.json"), "{not json");
  EXPECT_EQ(run("export-rules --tree " + path("junk.json")).code, 2);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  fixtures::write_file(path("cfg.json"), R"({"seed": 5, "teacher": {"n_trees": 6},
    "distill": {"folds": 4, "repeats": 1}})");
  auto a = run("--config " + path("cfg.json") + " distill " + data_flags() + " --out " + path("a.csv"));
  auto b = run("distill " + data_flags() + " --seed 5 --n-trees 6 --folds 4 --repeats 1 --out " +
               path("b.csv"));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(fixtures::read_file(path("a.csv")), fixtures::read_file(path("b.csv")));
  auto c = run("--config " + path("cfg.json") + " distill " + data_flags() + " --seed 6 --out " +
               path("c.csv"));
  ASSERT_EQ(c.code, 0);
  auto m = nlohmann::json::parse(fixtures::read_file(path("c.csv.manifest.json")));
  EXPECT_EQ(m["seed"], 6);
  EXPECT_EQ(m["config"]["folds"], 4);

  fixtures::write_file(path("typo.json"), R"({"teacher": {"n_tree": 6}})");
  auto t = run("--config " + path("typo.json") + " distill " + data_flags());
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("n_tree"), std::string::npos);
}

TEST_F(Cli, ExternalSoftLabelsInEval) {
  auto d = run("distill " + data_flags() + " --n-trees 8 --repeats 1 --out " + path("soft.csv"));
  ASSERT_EQ(d.code, 0);
  auto e = run("eval " + data_flags() + " --soft-labels " + path("soft.csv") +
               " --runs 2 --alpha-grid 0,1 --no-teacher-eval --out " + path("r.json"));
  ASSERT_EQ(e.code, 0) << e.err;
  auto rep = nlohmann::json::parse(fixtures::read_file(path("r.json")));
  EXPECT_EQ(rep["format"], "redt-report");
  EXPECT_EQ(rep["runs"].size(), 2u);
  auto m = nlohmann::json::parse(fixtures::read_file(path("r.json.manifest.json")));
  EXPECT_EQ(m["inputs"].size(), 2u);
}

TEST_F(Cli, DistillCanSaveTeacherForExport) {
  auto d = run("distill " + data_flags() + " --n-trees 4 --repeats 1 --out " + path("s.csv") +
               " --teacher-out " + path("forest.json"));
  ASSERT_EQ(d.code, 0) << d.err;
  auto s = run("export-tree --model " + path("forest.json"));
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out.rfind("forest: trees 4", 0), 0u);
  auto j = run("export-tree --model " + path("forest.json") + " --format json --out " +
               path("f2.json"));
  ASSERT_EQ(j.code, 0);
  EXPECT_TRUE(std::filesystem::exists(path("f2.json.manifest.json")));
}

TEST_F(Cli, LabelAndCategoricalDefaults) {
  const std::string crx = std::string(REDT_DATA_DIR) + "/crx.csv";
  auto d = run("distill --data " + crx + " --label class --teacher rf --folds 5 --repeats 5 --seed 7" +
               " --n-trees 10 --out " + path("out.csv"));
  ASSERT_EQ(d.code, 0) << d.err;
  auto t = run("train --data " + crx + " --soft-labels " + path("out.csv") +
               " --alpha 0.2 --min-leaf 5 --out " + path("tree.json") + " --metadata-out " +
               path("meta.json"));
  ASSERT_EQ(t.code, 0) << t.err;
  auto meta = nlohmann::json::parse(fixtures::read_file(path("meta.json")));
  EXPECT_EQ(meta["n"], 653);
  EXPECT_EQ(meta["K"], 2);
  auto tree = nlohmann::json::parse(fixtures::read_file(path("tree.json")));
  EXPECT_EQ(tree["schema"]["label_column"], "class");
  EXPECT_EQ(tree["schema"]["categorical"].size(), 9u);

  fixtures::write_file(path("typo.csv"), "x1,x2,class\n1,2,a\n1.5,abc,b\n");
  EXPECT_EQ(run("train --data " + path("typo.csv") + " --alpha 1 --out " + path("t.json")).code, 0);
  EXPECT_EQ(run("train --data " + path("typo.csv") + " --categorical '' --alpha 1").code, 2);
}

// Command-line front end: distill, train, predict, eval, gridsearch,
// export-rules, export-tree.
//
// Precedence: built-in defaults < --config JSON < explicit flags.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error. Failures print a
// single JSON line {"error": ..., "exit_code": ..., "message": ...} to stderr.

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "redt/distill.hpp"
#include "redt/eval.hpp"
#include "redt/forest.hpp"
#include "redt/redt.hpp"
#include "redt/soft_label_table.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Empty label means the last column. Unset categorical means every feature
// column with a non-numeric cell.
struct DataSpec {
  std::string path;
  std::string label;
  std::optional<std::vector<std::string>> categorical;
};

// Everything a subcommand may need. Filled from defaults, then the config
// file, then flags.
struct Settings {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  DataSpec data;
  redt::TeacherSpec teacher;
  std::string distill_method = "jackknife";
  redt::DistillConfig distill;
  redt::ReDTConfig tree;
  redt::ExperimentConfig experiment;
  std::optional<std::string> soft_labels;
  std::optional<double> soft_temperature;
  std::optional<std::string> metadata_out;
};

// ---------------------------------------------------------------------------
// Config file

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& out) {
  if (auto it = obj.find(key); it != obj.end()) {
    if (it->is_null()) out.reset();
    else out = it->get<T>();
  }
}

void require_keys(const json& obj, const std::string& section,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw UsageError("config section '" + section + "' must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw UsageError("unknown config key '" + section + "." + k + "'");
  }
}

redt::PseudoLabelSource parse_pseudo(const std::string& s) {
  if (s == "mixed") return redt::PseudoLabelSource::mixed;
  if (s == "soft") return redt::PseudoLabelSource::soft;
  throw UsageError("pseudo_labels must be 'mixed' or 'soft'");
}

void apply_config(const json& j, Settings& s) {
  require_keys(j, "", {"seed", "jobs", "data", "teacher", "distill", "tree", "experiment"});
  read_key(j, "seed", s.seed);
  read_key(j, "jobs", s.jobs);
  if (auto it = j.find("data"); it != j.end()) {
    require_keys(*it, "data", {"path", "label", "categorical"});
    read_key(*it, "path", s.data.path);
    read_key(*it, "label", s.data.label);
    read_optional(*it, "categorical", s.data.categorical);
  }
  if (auto it = j.find("teacher"); it != j.end()) {
    require_keys(*it, "teacher", {"kind", "n_trees", "min_leaf", "features_per_split",
                                  "bootstrap", "criterion", "file_path", "temperature"});
    std::string kind = it->value("kind", "rf");
    if (kind != "rf" && kind != "external")
      throw UsageError("teacher.kind must be 'rf' or 'external'");
    s.teacher.kind = kind == "rf" ? redt::TeacherKind::builtin_random_forest
                                  : redt::TeacherKind::external_file;
    read_key(*it, "n_trees", s.teacher.n_trees);
    read_key(*it, "min_leaf", s.teacher.min_leaf);
    read_optional(*it, "features_per_split", s.teacher.features_per_split);
    read_key(*it, "bootstrap", s.teacher.bootstrap);
    if (it->contains("criterion"))
      s.teacher.criterion = redt::parse_criterion(it->at("criterion").get<std::string>());
    read_optional(*it, "file_path", s.soft_labels);
    read_optional(*it, "temperature", s.soft_temperature);
  }
  if (auto it = j.find("distill"); it != j.end()) {
    require_keys(*it, "distill", {"method", "folds", "repeats", "stratified", "repeat_seeds"});
    read_key(*it, "method", s.distill_method);
    read_key(*it, "folds", s.distill.folds);
    read_key(*it, "repeats", s.distill.repeats);
    read_key(*it, "stratified", s.distill.stratified);
    read_key(*it, "repeat_seeds", s.distill.repeat_seeds);
  }
  if (auto it = j.find("tree"); it != j.end()) {
    require_keys(*it, "tree", {"alpha", "min_leaf", "criterion", "max_depth", "pseudo_labels"});
    read_key(*it, "alpha", s.tree.alpha);
    read_key(*it, "min_leaf", s.tree.min_leaf);
    if (it->contains("criterion"))
      s.tree.criterion = redt::parse_criterion(it->at("criterion").get<std::string>());
    read_optional(*it, "max_depth", s.tree.max_depth);
    if (it->contains("pseudo_labels"))
      s.tree.pseudo_source = parse_pseudo(it->at("pseudo_labels").get<std::string>());
  }
  if (auto it = j.find("experiment"); it != j.end()) {
    require_keys(*it, "experiment", {"alpha_grid", "n_runs", "test_fraction",
                                     "validation_fraction", "alpha_selection",
                                     "evaluate_teacher"});
    auto& e = s.experiment;
    read_key(*it, "alpha_grid", e.alpha_grid);
    read_key(*it, "n_runs", e.n_runs);
    read_key(*it, "test_fraction", e.test_fraction);
    read_key(*it, "validation_fraction", e.validation_fraction);
    if (it->contains("alpha_selection"))
      e.alpha_selection = redt::parse_alpha_selection(it->at("alpha_selection").get<std::string>());
    read_key(*it, "evaluate_teacher", e.evaluate_teacher);
  }
}

std::optional<std::string> prescan_config(int argc, char** argv) {
  std::optional<std::string> path;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config") {
      if (i + 1 >= argc) throw UsageError("--config needs a file argument");
      path = argv[i + 1];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    }
  }
  return path;
}

void load_config(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  try {
    apply_config(j, s);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  } catch (const redt::InvalidArgument& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Outputs and manifests

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw redt::DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path()))
    throw redt::DataError("output directory does not exist: " +
                          target.parent_path().string());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw redt::DataError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw redt::DataError("failed writing " + tmp);
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw redt::DataError("cannot move output into place: " + path + ": " + ec.message());
  }
}

struct Run {
  std::string command;
  Settings settings;
  json config;  // the resolved settings this command depends on
  std::vector<std::string> inputs;

  void emit(const std::string& path, const std::string& content) const {
    write_atomic(path, content);
    json ins = json::array();
    for (const auto& in : inputs) ins.push_back({{"path", in}, {"fnv1a64", hex(fnv1a(read_bytes(in)))}});
    const std::string cfg = config.dump();
    json manifest{{"tool", "redt"},
                  {"manifest_version", 1},
                  {"command", command},
                  {"output", {{"path", path}, {"fnv1a64", hex(fnv1a(content))}}},
                  {"inputs", std::move(ins)},
                  {"seed", settings.seed},
                  {"config", config},
                  {"config_hash", hex(fnv1a(cfg))}};
    write_atomic(path + ".manifest.json", manifest.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------------------
// Resolved-settings JSON (jobs is excluded: it never changes outputs)

json data_json(const DataSpec& d) {
  json j{{"path", d.path}, {"label", d.label}};
  j["categorical"] = d.categorical ? json(*d.categorical) : json();
  return j;
}

json tree_json(const redt::ReDTConfig& t) {
  json j{{"alpha", t.alpha},
         {"min_leaf", t.min_leaf},
         {"criterion", redt::to_string(t.criterion)},
         {"pseudo_labels", t.pseudo_source == redt::PseudoLabelSource::mixed ? "mixed" : "soft"}};
  j["max_depth"] = t.max_depth ? json(*t.max_depth) : json();
  return j;
}

json soft_json(const Settings& s) {
  json j{{"file", s.soft_labels ? json(*s.soft_labels) : json()}};
  j["temperature"] = s.soft_temperature ? json(*s.soft_temperature) : json();
  return j;
}

// ---------------------------------------------------------------------------
// Shared flag groups

void add_data_flags(CLI::App* sub, Settings& s) {
  sub->add_option("--data", s.data.path, "Input CSV with a header row");
  sub->add_option("--label", s.data.label, "Name of the class label column (default: last)");
  sub->add_option_function<std::vector<std::string>>(
         "--categorical",
         [&s](const std::vector<std::string>& v) { s.data.categorical = v; },
         "Comma-separated categorical columns (default: every non-numeric column)")
      ->delimiter(',');
  sub->add_option_function<std::string>(
      "--metadata-out", [&s](const std::string& p) { s.metadata_out = p; },
      "Also write dataset metadata (encodings, K, D, n) as JSON");
}

void add_teacher_flags(CLI::App* sub, Settings& s) {
  sub->add_option_function<std::string>(
         "--teacher",
         [&s](const std::string& k) {
           if (k != "rf" && k != "external")
             throw CLI::ValidationError("--teacher", "must be 'rf' or 'external'");
           s.teacher.kind = k == "rf" ? redt::TeacherKind::builtin_random_forest
                                      : redt::TeacherKind::external_file;
         },
         "Teacher: rf (built-in random forest) or external (soft-label file)");
  sub->add_option("--n-trees", s.teacher.n_trees, "Trees in the forest teacher");
  sub->add_option("--teacher-min-leaf", s.teacher.min_leaf, "Minimum leaf size of teacher trees");
  sub->add_option_function<std::size_t>(
      "--features-per-split", [&s](std::size_t v) { s.teacher.features_per_split = v; },
      "Features scored per node (default floor(sqrt(D)))");
  sub->add_flag_function(
      "--no-bootstrap", [&s](std::int64_t) { s.teacher.bootstrap = false; },
      "Grow teacher trees on the full sample");
}

void add_distill_flags(CLI::App* sub, Settings& s) {
  sub->add_option("--folds", s.distill.folds, "Jackknife folds M");
  sub->add_option("--repeats", s.distill.repeats, "Independent fold partitions to average");
  sub->add_flag_function(
      "--stratified", [&s](std::int64_t) { s.distill.stratified = true; },
      "Stratify folds by class");
}

void add_soft_flags(CLI::App* sub, Settings& s) {
  sub->add_option_function<std::string>(
      "--soft-labels", [&s](const std::string& p) { s.soft_labels = p; },
      "Soft-label CSV (index,p_0,...,p_{K-1})");
  sub->add_option_function<double>(
      "--soft-temperature", [&s](double t) { s.soft_temperature = t; },
      "Treat soft-label rows as raw scores and soften with this temperature");
}

void add_tree_flags(CLI::App* sub, Settings& s, bool with_alpha) {
  if (with_alpha) sub->add_option("--alpha", s.tree.alpha, "Weight of the hard label");
  sub->add_option("--min-leaf", s.tree.min_leaf, "Nodes with at most this many rows are leaves");
  sub->add_option_function<std::string>(
      "--criterion", [&s](const std::string& c) { s.tree.criterion = redt::parse_criterion(c); },
      "gini or entropy");
  sub->add_option_function<std::size_t>(
      "--max-depth", [&s](std::size_t d) { s.tree.max_depth = d; }, "Optional depth cap");
  sub->add_option_function<std::string>(
      "--pseudo-labels", [&s](const std::string& p) { s.tree.pseudo_source = parse_pseudo(p); },
      "Purity test on argmax of the mixed (default) or soft label");
}

void add_experiment_flags(CLI::App* sub, Settings& s) {
  sub->add_option("--alpha-grid", s.experiment.alpha_grid, "Comma-separated alpha values")
      ->delimiter(',');
  sub->add_option("--runs", s.experiment.n_runs, "Repetitions with fresh train/test splits");
  sub->add_option("--test-fraction", s.experiment.test_fraction, "Share of rows held out for test");
  sub->add_option("--validation-fraction", s.experiment.validation_fraction,
                  "Share of training rows used to choose alpha");
  sub->add_option_function<std::string>(
      "--alpha-selection",
      [&s](const std::string& v) { s.experiment.alpha_selection = redt::parse_alpha_selection(v); },
      "validation (default) or test_oracle");
  sub->add_flag_function(
      "--no-teacher-eval", [&s](std::int64_t) { s.experiment.evaluate_teacher = false; },
      "Skip the teacher's own test accuracy");
}

// ---------------------------------------------------------------------------
// Subcommand bodies

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

void require_data(const std::string& cmd, const Settings& s) {
  require(!s.data.path.empty(), cmd + " requires --data");
}

redt::Dataset load_data(const Settings& s) {
  auto table = redt::read_csv_file(s.data.path);
  if (table.header.empty()) throw redt::DataError(s.data.path + " has no header row");
  const std::string label = s.data.label.empty() ? table.header.back() : s.data.label;
  const auto categorical =
      s.data.categorical ? *s.data.categorical : redt::infer_categorical(table, label);
  return redt::dataset_from_table(table, label, categorical);
}

void emit_metadata(const Run& run, const std::optional<std::string>& path,
                   const redt::Dataset& ds) {
  if (path) run.emit(*path, redt::metadata_json(ds).dump(2) + "\n");
}

std::string soft_table_csv(const redt::SoftLabelTable& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

int cmd_distill(Run& run, const std::string& out, const std::optional<std::string>& teacher_out) {
  auto& s = run.settings;
  require_data("distill", s);
  require(s.teacher.kind == redt::TeacherKind::builtin_random_forest,
          "distill needs the built-in rf teacher");
  require(s.distill_method == "jackknife" || s.distill_method == "direct",
          "--method must be 'jackknife' or 'direct'");
  s.teacher.seed = s.seed;
  s.teacher.jobs = s.jobs;
  s.distill.seed = s.seed;
  s.distill.jobs = s.jobs;
  s.teacher.validate();
  s.distill.validate();
  run.config = {{"data", data_json(s.data)},
                {"method", s.distill_method},
                {"folds", s.distill.folds},
                {"repeats", s.distill.repeats},
                {"stratified", s.distill.stratified},
                {"repeat_seeds", s.distill.repeat_seeds},
                {"teacher", redt::to_json(s.teacher)}};
  run.inputs = {s.data.path};

  auto ds = load_data(s);
  emit_metadata(run, s.metadata_out, ds);
  redt::TeacherSpec spec = s.teacher;
  spec.jobs = s.distill_method == "direct" ? s.jobs : 1;
  redt::RandomForestTeacher teacher{spec};
  auto table = s.distill_method == "direct"
                   ? redt::direct_distill(ds, teacher, s.seed)
                   : redt::jackknife_distill(ds, s.distill, teacher);
  run.emit(out, soft_table_csv(table));
  std::cout << "wrote " << out << " (" << table.count() << " rows, mean max component "
            << redt::format_double(table.mean_max_component()) << ")\n";
  if (teacher_out) {
    redt::TeacherSpec full = s.teacher;
    auto forest = redt::RandomForest::fit(ds, full);
    run.emit(*teacher_out, forest.to_json().dump() + "\n");
    std::cout << "wrote " << *teacher_out << " (" << forest.trees().size() << " trees)\n";
  }
  return 0;
}

redt::SoftLabelTable load_soft(const Settings& s, const redt::Dataset& ds) {
  return redt::load_external_soft_labels(*s.soft_labels, ds, s.soft_temperature);
}

int cmd_train(Run& run, const std::string& out) {
  auto& s = run.settings;
  require_data("train", s);
  require(s.soft_labels || s.tree.alpha == 1.0,
          "train requires --soft-labels unless --alpha is 1");
  if (s.soft_temperature)
    require(*s.soft_temperature > 0.0, "--soft-temperature must be positive");
  s.tree.validate();
  run.config = {{"data", data_json(s.data)}, {"tree", tree_json(s.tree)}, {"soft_labels", soft_json(s)}};
  run.inputs = {s.data.path};
  if (s.soft_labels) run.inputs.push_back(*s.soft_labels);

  auto ds = load_data(s);
  emit_metadata(run, s.metadata_out, ds);
  auto soft = s.soft_labels ? load_soft(s, ds) : redt::SoftLabelTable::from_hard_labels(ds);
  auto tree = redt::fit(ds, soft, s.tree);
  run.emit(out, tree.to_json().dump() + "\n");
  std::cout << "wrote " << out << " (nodes " << tree.count_nodes() << ", rules "
            << tree.count_rules() << ", depth " << tree.depth() << ")\n";
  return 0;
}

redt::Tree load_tree(const std::string& path) {
  json j;
  try {
    j = json::parse(read_bytes(path));
  } catch (const json::exception& e) {
    throw redt::DataError(path + " is not valid JSON: " + e.what());
  }
  return redt::Tree::from_json(j);
}

int cmd_predict(Run& run, const std::string& tree_path, const std::string& out) {
  auto& s = run.settings;
  require(!tree_path.empty(), "predict requires --tree");
  require(!s.data.path.empty(), "predict requires --data");
  run.config = {{"tree", tree_path}, {"data", s.data.path}};
  run.inputs = {tree_path, s.data.path};
  auto tree = load_tree(tree_path);
  require(tree.schema().has_value(), "tree file carries no schema; retrain with this tool");
  const auto& schema = *tree.schema();
  auto rows = redt::encode_with_schema(redt::read_csv_file(s.data.path), schema);

  std::ostringstream os;
  os << "index,predicted,class";
  for (std::size_t k = 0; k < tree.n_classes(); ++k) os << ",p_" << k;
  os << '\n';
  std::vector<int> pred;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto p = tree.predict_logits(rows.row(i));
    int c = redt::pseudo_label(p);
    pred.push_back(c);
    os << i << ',' << c << ',' << schema.class_names[c];
    for (double v : p.components()) os << ',' << redt::format_double(v);
    os << '\n';
  }
  run.emit(out, os.str());
  std::cout << "wrote " << out << " (" << rows.size() << " rows)";
  if (rows.labels && !rows.labels->empty())
    std::cout << ", accuracy " << redt::format_double(redt::accuracy(pred, *rows.labels));
  std::cout << '\n';
  return 0;
}

redt::ExperimentConfig experiment_config(Settings& s) {
  redt::ExperimentConfig e = s.experiment;
  e.teacher = s.teacher;
  e.distill = s.distill;
  e.tree = s.tree;
  e.seed = s.seed;
  e.jobs = s.jobs;
  if (s.soft_labels) {
    e.teacher.kind = redt::TeacherKind::external_file;
    e.teacher.file_path = *s.soft_labels;
    e.teacher.temperature = s.soft_temperature;
  } else {
    require(e.teacher.kind == redt::TeacherKind::builtin_random_forest,
            "--teacher external needs --soft-labels");
  }
  e.validate();
  return e;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int cmd_experiment(Run& run, const std::string& cmd, const std::string& out,
                   std::string runs_csv, std::string curves_csv) {
  auto& s = run.settings;
  require_data(cmd, s);
  auto e = experiment_config(s);
  run.config = {{"data", data_json(s.data)}, {"experiment", redt::to_json(e)}, {"soft_labels", soft_json(s)}};
  run.inputs = {s.data.path};
  if (s.soft_labels) run.inputs.push_back(*s.soft_labels);

  auto ds = load_data(s);
  emit_metadata(run, s.metadata_out, ds);
  std::optional<redt::SoftLabelTable> external;
  if (s.soft_labels) external = load_soft(s, ds);
  auto rep = redt::run_experiment(ds, e, external ? &*external : nullptr);

  std::ostringstream curves;
  redt::write_curves_csv(curves, rep.runs, rep.mean_curve);
  if (cmd == "gridsearch") {
    run.emit(out, curves.str());
    std::cout << "wrote " << out << '\n';
  } else {
    if (runs_csv.empty()) runs_csv = with_suffix(out, ".runs.csv");
    if (curves_csv.empty()) curves_csv = with_suffix(out, ".curves.csv");
    run.emit(out, redt::to_json(rep).dump(2) + "\n");
    std::ostringstream runs;
    redt::write_runs_csv(runs, rep);
    run.emit(runs_csv, runs.str());
    run.emit(curves_csv, curves.str());
    std::cout << "wrote " << out << ", " << runs_csv << ", " << curves_csv << '\n';
  }
  const auto& m = rep.means;
  std::cout << "DT accuracy " << redt::format_double(m.dt_accuracy) << ", ReDT accuracy "
            << redt::format_double(m.redt_accuracy) << ", DT nodes "
            << redt::format_double(m.dt_nodes) << ", ReDT nodes "
            << redt::format_double(m.redt_nodes) << ", compression "
            << redt::format_double(m.compression_rate) << ", mean alpha* "
            << redt::format_double(m.best_alpha) << " (" << redt::to_string(e.alpha_selection)
            << ")\n";
  return 0;
}

void emit_or_print(const Run& run, const std::optional<std::string>& out,
                   const std::string& content) {
  if (out) run.emit(*out, content);
  else std::cout << content;
}

int cmd_export_rules(Run& run, const std::string& tree_path, const std::optional<std::string>& out) {
  require(!tree_path.empty(), "export-rules requires --tree");
  run.config = {{"tree", tree_path}};
  run.inputs = {tree_path};
  emit_or_print(run, out, redt::rules_text(load_tree(tree_path)));
  return 0;
}

int cmd_export_tree(Run& run, const std::string& model_path, const std::string& format,
                    const std::optional<std::string>& out) {
  require(!model_path.empty(), "export-tree requires --model");
  require(format == "json" || format == "summary", "--format must be 'json' or 'summary'");
  run.config = {{"model", model_path}, {"format", format}};
  run.inputs = {model_path};
  json j;
  try {
    j = json::parse(read_bytes(model_path));
  } catch (const json::exception& e) {
    throw redt::DataError(model_path + " is not valid JSON: " + e.what());
  }
  const std::string kind = j.is_object() ? j.value("format", "") : "";
  std::ostringstream os;
  if (kind == "redt-tree") {
    auto t = redt::Tree::from_json(j);
    if (format == "json") os << t.to_json().dump(2) << '\n';
    else
      os << "tree: features " << t.n_features() << ", classes " << t.n_classes() << ", nodes "
         << t.count_nodes() << ", rules " << t.count_rules() << ", depth " << t.depth() << '\n';
  } else if (kind == "redt-forest") {
    auto f = redt::RandomForest::from_json(j);
    if (format == "json") {
      os << f.to_json().dump(2) << '\n';
    } else {
      std::size_t depth = 0;
      for (const auto& t : f.trees()) depth = std::max(depth, t.depth());
      os << "forest: trees " << f.trees().size() << ", features " << f.n_features()
         << ", classes " << f.n_classes() << ", total nodes " << f.total_nodes()
         << ", max depth " << depth << '\n';
    }
  } else {
    throw redt::DataError(model_path + " is neither a redt-tree nor a redt-forest document");
  }
  emit_or_print(run, out, os.str());
  return 0;
}

void print_error(const std::string& kind, int code, const std::string& msg) {
  json j{{"error", kind}, {"exit_code", code}, {"message", msg}};
  std::cerr << j.dump() << std::endl;
}

int dispatch(int argc, char** argv) {
  Settings s;
  if (auto cfg = prescan_config(argc, argv)) load_config(*cfg, s);

  CLI::App app{"Rectified decision trees: distill soft labels, train, evaluate, export"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--seed", s.seed, "Seed for every random choice");
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--jobs", s.jobs, "Worker threads; never changes outputs")
      ->check(CLI::PositiveNumber);

  std::string out, runs_csv, curves_csv, tree_path, model_path, format = "summary";
  std::optional<std::string> opt_out, teacher_out;

  auto* distill = app.add_subcommand("distill", "Write jackknife soft labels for a dataset");
  add_data_flags(distill, s);
  add_teacher_flags(distill, s);
  add_distill_flags(distill, s);
  distill->add_option("--method", s.distill_method, "jackknife (default) or direct");
  distill->add_option("--out", out, "Soft-label CSV to write")->default_str("soft_labels.csv");
  distill->add_option_function<std::string>(
      "--teacher-out", [&](const std::string& p) { teacher_out = p; },
      "Also fit the teacher on all rows and write it as JSON");

  auto* train = app.add_subcommand("train", "Fit a rectified decision tree");
  add_data_flags(train, s);
  add_soft_flags(train, s);
  add_tree_flags(train, s, true);
  train->add_option("--out", out, "Tree JSON to write")->default_str("tree.json");

  auto* predict = app.add_subcommand("predict", "Predict rows of a CSV with a saved tree");
  predict->add_option("--tree", tree_path, "Tree JSON");
  predict->add_option("--data", s.data.path, "CSV with the training feature columns");
  predict->add_option("--out", out, "Predictions CSV to write")->default_str("predictions.csv");

  auto* eval = app.add_subcommand("eval", "Run the repeated DT vs ReDT experiment");
  auto* grid = app.add_subcommand("gridsearch", "Per-alpha accuracy, rules and compression");
  for (auto* sub : {eval, grid}) {
    add_data_flags(sub, s);
    add_teacher_flags(sub, s);
    add_distill_flags(sub, s);
    add_soft_flags(sub, s);
    add_tree_flags(sub, s, false);
    add_experiment_flags(sub, s);
  }
  eval->add_option("--out", out, "Report JSON to write")->default_str("report.json");
  eval->add_option("--runs-csv", runs_csv, "Per-run table (default <out stem>.runs.csv)");
  eval->add_option("--curves-csv", curves_csv, "Per-alpha curves (default <out stem>.curves.csv)");
  grid->add_option("--out", out, "Curves CSV to write")->default_str("curves.csv");

  auto* rules = app.add_subcommand("export-rules", "Print one decision rule per leaf");
  rules->add_option("--tree", tree_path, "Tree JSON");
  rules->add_option_function<std::string>(
      "--out", [&](const std::string& p) { opt_out = p; }, "Write to a file instead of stdout");

  auto* export_tree = app.add_subcommand("export-tree", "Dump a tree or forest");
  export_tree->add_option("--model", model_path, "Tree or forest JSON");
  export_tree->add_option("--format", format, "json (canonical) or summary")
      ->default_str("summary");
  export_tree->add_option_function<std::string>(
      "--out", [&](const std::string& p) { opt_out = p; }, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  auto default_out = [&](const char* def) {
    if (out.empty()) out = def;
  };
  Run run;
  run.command = name;
  run.settings = s;
  if (name == "distill") {
    default_out("soft_labels.csv");
    return cmd_distill(run, out, teacher_out);
  }
  if (name == "train") {
    default_out("tree.json");
    return cmd_train(run, out);
  }
  if (name == "predict") {
    default_out("predictions.csv");
    return cmd_predict(run, tree_path, out);
  }
  if (name == "eval") {
    default_out("report.json");
    return cmd_experiment(run, name, out, runs_csv, curves_csv);
  }
  if (name == "gridsearch") {
    default_out("curves.csv");
    return cmd_experiment(run, name, out, {}, {});
  }
  if (name == "export-rules") return cmd_export_rules(run, tree_path, opt_out);
  return cmd_export_tree(run, model_path, format, opt_out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const UsageError& e) {
    print_error("usage", 1, e.what());
    return 1;
  } catch (const CLI::Error& e) {
    print_error("usage", 1, e.what());
    return 1;
  } catch (const redt::InvalidArgument& e) {
    print_error("usage", 1, e.what());
    return 1;
  } catch (const redt::DataError& e) {
    print_error("data", 2, e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("internal", 3, e.what());
    return 3;
  }
}

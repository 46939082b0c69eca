// Minimal library walk-through: load a CSV, distill jackknife soft labels,
// fit a standard tree and a rectified tree, compare size and test accuracy.
//
//   redt_example_quickstart [path/to/crx.csv]

#include <iostream>
#include <string>

#include "redt/distill.hpp"
#include "redt/eval.hpp"
#include "redt/redt.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : std::string(REDT_DATA_DIR) + "/crx.csv";
  try {
    auto ds = redt::load_csv(path, "class",
                             {"A1", "A4", "A5", "A6", "A7", "A9", "A10", "A12", "A13"});
    auto [train, test] = redt::train_test_split(ds, 0.2, 1);

    redt::TeacherSpec teacher;
    teacher.n_trees = 100;
    redt::DistillConfig distill;
    distill.seed = 2;
    auto soft = redt::jackknife_distill(train, distill, redt::RandomForestTeacher{teacher});

    redt::ReDTConfig cfg;
    auto dt = redt::fit_standard(train, cfg);
    cfg.alpha = 0.2;
    auto redt_tree = redt::fit(train, soft, cfg);

    auto acc = [&](const redt::Tree& t) {
      return redt::accuracy(redt::predict_all(t, test), test.labels());
    };
    std::cout << "DT   nodes " << dt.count_nodes() << "  test accuracy " << acc(dt) << '\n'
              << "ReDT nodes " << redt_tree.count_nodes() << "  test accuracy "
              << acc(redt_tree) << "  (alpha 0.2)\n\n"
              << redt::rules_text(redt_tree);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

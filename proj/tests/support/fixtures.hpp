#pragma once

#include <unistd.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "redt/dataset.hpp"
#include "redt/soft_label_table.hpp"

namespace fixtures {

// Gaussian clusters, one per class, with unit noise and centers `spread`
// apart along random directions. Values are rounded to `decimals` places so
// duplicate feature values occur.
inline redt::Dataset blobs(std::size_t n, std::size_t d, std::size_t k,
                           std::uint64_t seed, double spread = 1.5,
                           int decimals = 1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> centers(k, std::vector<double>(d));
  for (auto& c : centers)
    for (auto& v : c) v = spread * noise(gen);
  const double scale = std::pow(10.0, decimals);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    int c = static_cast<int>(i % k);
    y.push_back(c);
    for (std::size_t f = 0; f < d; ++f)
      x.push_back(std::round((centers[c][f] + noise(gen)) * scale) / scale);
  }
  return redt::Dataset(std::move(x), d, std::move(y), k);
}

// Two classes split by x0 > 0 with a margin; remaining features are noise.
inline redt::Dataset separable(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    int c = static_cast<int>(i % 2);
    y.push_back(c);
    x.push_back(c ? 1.0 + std::abs(u(gen)) : -1.0 - std::abs(u(gen)));
    for (std::size_t f = 1; f < d; ++f) x.push_back(u(gen));
  }
  return redt::Dataset(std::move(x), d, std::move(y), 2);
}

// Random soft labels, correlated with the hard label when `bias` > 0.
inline redt::SoftLabelTable random_soft(const redt::Dataset& ds, std::uint64_t seed,
                                        double bias = 1.0) {
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> g(1.0, 1.0);
  redt::SoftLabelTable t(ds.size(), ds.n_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> p(ds.n_classes());
    double s = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      p[c] = g(gen) + (static_cast<int>(c) == ds.label(i) ? bias : 0.0);
      s += p[c];
    }
    for (double& v : p) v /= s;
    t.set(i, redt::SoftLabel::renormalized(std::move(p)));
  }
  return t;
}

inline std::string data_path(const std::string& name) {
  return std::string(REDT_DATA_DIR) + "/" + name;
}

inline redt::Dataset crx() {
  return redt::load_csv(data_path("crx.csv"), "class",
                        {"A1", "A4", "A5", "A6", "A7", "A9", "A10", "A12", "A13"});
}

inline redt::Dataset german() {
  return redt::load_csv(data_path("german.csv"), "class",
                        {"A1", "A3", "A4", "A6", "A7", "A9", "A10", "A12", "A14",
                         "A15", "A17", "A19", "A20"});
}

inline redt::Dataset cmc() { return redt::load_csv(data_path("cmc.csv"), "method"); }

inline redt::Dataset letter() {
  return redt::load_csv(data_path("letter.csv"), "letter");
}

inline redt::Dataset magic() { return redt::load_csv(data_path("magic.csv"), "class"); }

inline redt::Dataset adult() {
  return redt::load_csv(data_path("adult.csv"), "income",
                        {"workclass", "education", "marital_status", "occupation",
                         "relationship", "race", "sex", "native_country"});
}

// Fresh empty directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("redt_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace redt {

// Components of a probability vector must sum to 1 within this tolerance.
inline constexpr double kSimplexTolerance = 1e-9;
// Externally supplied probability rows within this distance of summing to 1
// are renormalized; anything further off is rejected.
inline constexpr double kRenormalizeTolerance = 1e-6;

inline bool on_simplex(std::span<const double> p,
                       double tol = kSimplexTolerance) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || v > 1.0 + tol) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Index of the largest component; ties go to the lowest index.
inline int argmax(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<int>(best);
}

class HardLabel {
 public:
  HardLabel(int class_index, std::size_t n_classes)
      : components_(n_classes, 0.0), class_index_(class_index) {
    if (class_index < 0 || static_cast<std::size_t>(class_index) >= n_classes)
      throw InvalidArgument("class index " + std::to_string(class_index) +
                            " outside [0, " + std::to_string(n_classes) + ")");
    components_[class_index] = 1.0;
  }

  std::span<const double> components() const { return components_; }
  int class_index() const { return class_index_; }
  std::size_t size() const { return components_.size(); }
  double operator[](std::size_t i) const { return components_[i]; }

 private:
  std::vector<double> components_;
  int class_index_;
};

class SoftLabel {
 public:
  // Throws unless `p` lies on the simplex within kSimplexTolerance.
  explicit SoftLabel(std::vector<double> p) : components_(std::move(p)) {
    if (!on_simplex(components_))
      throw InvalidArgument("soft label is not a probability vector");
  }

  // Accepts a row whose sum is within kRenormalizeTolerance of 1, rescaling
  // it only when it is off by more than kSimplexTolerance.
  static SoftLabel renormalized(std::vector<double> p) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw DataError("probability row has a negative or non-finite entry");
      sum += v;
    }
    if (p.empty() || std::abs(sum - 1.0) > kRenormalizeTolerance)
      throw DataError("probability row sums to " + std::to_string(sum) +
                      ", not 1");
    if (std::abs(sum - 1.0) > kSimplexTolerance)
      for (double& v : p) v /= sum;
    return SoftLabel(std::move(p));
  }

  static SoftLabel from_hard(const HardLabel& h) {
    return SoftLabel(std::vector<double>(h.components().begin(),
                                         h.components().end()));
  }

  std::span<const double> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  double operator[](std::size_t i) const { return components_[i]; }
  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

 private:
  std::vector<double> components_;
};

class MixedLabel {
 public:
  std::span<const double> components() const { return components_; }
  double alpha() const { return alpha_; }
  std::size_t size() const { return components_.size(); }
  double operator[](std::size_t i) const { return components_[i]; }

 private:
  friend MixedLabel mix(const HardLabel&, const SoftLabel&, double);
  MixedLabel(std::vector<double> c, double alpha)
      : components_(std::move(c)), alpha_(alpha) {}

  std::vector<double> components_;
  double alpha_;
};

inline HardLabel to_one_hot(int class_index, std::size_t n_classes) {
  return HardLabel(class_index, n_classes);
}

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument("alpha must lie in [0, 1]");
}

// alpha * hard + (1 - alpha) * soft, componentwise.
inline MixedLabel mix(const HardLabel& hard, const SoftLabel& soft,
                      double alpha) {
  check_alpha(alpha);
  if (hard.size() != soft.size())
    throw InvalidArgument("hard and soft labels differ in dimension");
  std::vector<double> out(hard.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = alpha * hard[i] + (1.0 - alpha) * soft[i];
  return MixedLabel(std::move(out), alpha);
}

inline int pseudo_label(const SoftLabel& soft) {
  return argmax(soft.components());
}

// softmax(scores / T), computed with the max subtracted for stability.
inline SoftLabel soften_logits(std::span<const double> scores,
                               double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw InvalidArgument("temperature must be a positive finite number");
  if (scores.empty()) throw InvalidArgument("empty score vector");
  for (double s : scores)
    if (!std::isfinite(s)) throw InvalidArgument("non-finite raw score");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((scores[i] - top) / temperature);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return SoftLabel(std::move(p));
}

// Componentwise arithmetic mean of equally sized vectors.
inline std::vector<double> average_labels(
    std::span<const std::vector<double>> labels) {
  if (labels.empty()) throw InvalidArgument("cannot average an empty list");
  const std::size_t k = labels.front().size();
  std::vector<double> mean(k, 0.0);
  for (const auto& l : labels) {
    if (l.size() != k) throw InvalidArgument("labels differ in dimension");
    for (std::size_t i = 0; i < k; ++i) mean[i] += l[i];
  }
  for (double& v : mean) v /= static_cast<double>(labels.size());
  return mean;
}

}  // namespace redt

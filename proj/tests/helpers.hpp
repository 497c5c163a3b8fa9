#pragma once

// Small shared fixtures for the test suites: hand-built datasets and models
// whose behavior is easy to reason about analytically.

#include <cmath>
#include <vector>

#include "ulbench/data.hpp"
#include "ulbench/model.hpp"

namespace ulbench::testutil {

// Flat-vector dataset from explicit rows.
inline LabeledDataset flat_dataset(const std::vector<std::vector<float>>& rows,
                                   const std::vector<int>& labels,
                                   int num_classes, Split split = Split::kTrain,
                                   const std::string& name = "toy") {
  std::vector<float> data;
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  const int dim = rows.empty() ? 1 : static_cast<int>(rows[0].size());
  return LabeledDataset(name, Shape3{dim, 1, 1}, num_classes, split,
                        std::move(data), labels);
}

// Balanced dataset where input i is 10 * onehot(label); a logistic model with
// identity weights classifies it perfectly, a zero model predicts class 0.
inline LabeledDataset onehot_dataset(int num_classes, int per_class,
                                     Split split = Split::kTrain) {
  std::vector<std::vector<float>> rows;
  std::vector<int> labels;
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<float> x(num_classes, 0.0f);
      x[c] = 10.0f;
      rows.push_back(std::move(x));
      labels.push_back(c);
    }
  }
  return flat_dataset(rows, labels, num_classes, split, "onehot");
}

// Logistic model with all parameters zero: every logit is 0, every
// probability 1/C, and argmax tie-breaking selects class 0.
inline ModelState zero_logistic(int dim, int num_classes) {
  ModelState m;
  m.arch = make_logistic(Shape3{dim, 1, 1}, num_classes);
  m.params.assign(m.arch.param_count(), 0.0f);
  return m;
}

// Logistic model with identity weight matrix and zero bias (dim must equal
// num_classes): logits reproduce the input vector.
inline ModelState identity_logistic(int num_classes) {
  ModelState m = zero_logistic(num_classes, num_classes);
  for (int c = 0; c < num_classes; ++c)
    m.params[static_cast<std::size_t>(c) * num_classes + c] = 1.0f;
  return m;
}

inline double max_abs_diff(const std::vector<float>& a,
                           const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

inline bool bitwise_equal(const std::vector<float>& a,
                          const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace ulbench::testutil

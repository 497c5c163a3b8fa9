#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ulbench/arch.hpp"
#include "ulbench/common.hpp"

namespace ulbench {

enum class Split { kTrain, kTest };

// Immutable indexed collection of (input tensor, class label). Index i names
// the same sample for the lifetime of the object.
class LabeledDataset {
 public:
  LabeledDataset(std::string name, Shape3 shape, int num_classes, Split split,
                 std::vector<float> data, std::vector<int> labels);

  const std::string& name() const { return name_; }
  Shape3 shape() const { return shape_; }
  int num_classes() const { return num_classes_; }
  Split split() const { return split_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  const float* input(std::size_t i) const {
    return data_.data() + i * shape_.size();
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<float>& raw() const { return data_; }

  std::uint64_t fingerprint() const { return fingerprint_; }

  // Indices of all samples with the given label.
  std::vector<std::uint32_t> indices_of_class(int cls) const;
  std::vector<std::uint32_t> all_indices() const;

  // Materialized subset preserving sample order of `indices`.
  LabeledDataset subset(const std::vector<std::uint32_t>& indices,
                        const std::string& new_name) const;

  // Copy with some samples replaced (used by the poisoning generators).
  LabeledDataset with_modifications(
      const std::vector<std::uint32_t>& indices,
      const std::vector<std::vector<float>>* new_inputs,
      const std::vector<int>* new_labels, const std::string& new_name) const;

 private:
  std::string name_;
  Shape3 shape_;
  int num_classes_;
  Split split_;
  std::vector<float> data_;
  std::vector<int> labels_;
  std::uint64_t fingerprint_;
};

// CIFAR-10 binary batch files: records of 1 label byte + 3072 pixel bytes.
LabeledDataset load_cifar10_batches(const std::vector<std::filesystem::path>& files,
                                    const std::string& name, Split split,
                                    std::size_t max_per_class = 0);

void write_cifar10_batch(const LabeledDataset& ds, const std::filesystem::path& file);

// CSV of floats: one sample per row, "label,v0,v1,...".
LabeledDataset load_csv(const std::filesystem::path& file, const std::string& name,
                        Shape3 shape, int num_classes, Split split);

void write_csv(const LabeledDataset& ds, const std::filesystem::path& file);

// Gaussian mixture with well separated class means; flat feature vectors.
// Used by the analytic oracles and fast unit tests.
LabeledDataset make_gaussian_mixture(int num_classes, int per_class, int dim,
                                     double separation, double noise,
                                     std::uint64_t seed, Split split,
                                     const std::string& name = "gauss");

struct SyntheticImageSpec {
  int num_classes = 10;
  int per_class = 500;
  Shape3 shape{3, 32, 32};
  // Base-pattern amplitude vs. per-sample noise controls the train/test
  // generalization gap.
  double noise = 0.45;
  double jitter = 2.0;  // random spatial shift of the class pattern, pixels
  std::uint64_t seed = 0;
};

// Procedural image classes: one smooth random pattern per class, each sample
// a shifted copy plus heavy pixel noise, clipped to [0,1].
LabeledDataset make_synthetic_images(const SyntheticImageSpec& spec, Split split,
                                     const std::string& name = "synth");

}  // namespace ulbench

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ulbench/data.hpp"
#include "ulbench/model.hpp"

namespace ulbench {

enum class PoisonKind { kLabelFlip, kBackdoor };
enum class Corner { kTopLeft, kTopRight, kBottomLeft, kBottomRight };

std::string to_string(PoisonKind k);
std::string to_string(Corner c);
PoisonKind poison_kind_from_string(const std::string& s);
Corner corner_from_string(const std::string& s);

struct PoisonSpec {
  PoisonKind kind = PoisonKind::kBackdoor;
  std::size_t budget = 0;
  // label_flip: unordered class pairs forming a perfect matching.
  std::vector<std::pair<int, int>> flip_pairs;
  // backdoor
  int trigger_size = 4;
  Corner trigger_location = Corner::kBottomRight;
  float trigger_value = 1.0f;  // solid patch intensity
  int target_class = 0;
  std::uint64_t seed = 0;

  void validate(const LabeledDataset& ds) const;
};

// The pairs 0-9, 1-8, ..., 4-5 used by the depoisoning case study.
std::vector<std::pair<int, int>> mirror_flip_pairs(int num_classes);

// Flips labels of a stratified random sample (budget / num_classes per
// class) according to the pair matching. Inputs are untouched.
std::pair<LabeledDataset, std::vector<std::uint32_t>> apply_label_flip(
    const LabeledDataset& ds, const PoisonSpec& spec);

// Stamps a solid square trigger into a random sample of inputs and sets
// their labels to the target class. Idempotent on already-patched samples.
std::pair<LabeledDataset, std::vector<std::uint32_t>> apply_backdoor(
    const LabeledDataset& ds, const PoisonSpec& spec);

// Stamps the trigger into one input in place.
void stamp_trigger(const Shape3& shape, float* input, const PoisonSpec& spec);

// Percentage of triggered test inputs classified as the target class.
// Exclusive convention (default): test samples whose true label is already
// the target class are not counted in the denominator.
double attack_success_rate(const ModelState& model, const LabeledDataset& clean_test,
                           const PoisonSpec& spec, bool exclusive = true);

}  // namespace ulbench

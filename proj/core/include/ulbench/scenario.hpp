#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ulbench/attacks.hpp"
#include "ulbench/data.hpp"
#include "ulbench/model.hpp"

namespace ulbench {

enum class ScenarioKind {
  kOneClass,
  kAllClasses,
  kClassWise,
  kWorstCase,
  kBestCase,
  kDepoison,
};

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

// Disjoint, covering partition of the training indices into forget/retain.
struct ScenarioPlan {
  ScenarioKind kind = ScenarioKind::kOneClass;
  std::vector<std::uint32_t> forget_indices;  // sorted
  std::vector<std::uint32_t> retain_indices;  // sorted
  std::optional<int> target_class;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;  // retain set empty (single-class dataset)
  std::optional<PoisonSpec> poison;

  void check_partition(std::size_t dataset_size) const;
  std::string to_json() const;
  static ScenarioPlan from_json(const std::string& json_text);
};

// (1) Random subset of one class.
ScenarioPlan select_one_class(const LabeledDataset& ds, int class_id,
                              std::size_t budget, std::uint64_t seed);
// (2) Random subset across all classes.
ScenarioPlan select_all_classes(const LabeledDataset& ds, std::size_t budget,
                                std::uint64_t seed);
// (3) Every sample of one class.
ScenarioPlan select_class_wise(const LabeledDataset& ds, int class_id);
// (4) Budget samples with the lowest loss under the original model.
ScenarioPlan select_worst_case(const LabeledDataset& ds, const ModelState& model,
                               std::size_t budget);
// (5) Budget samples with the highest loss under the original model.
ScenarioPlan select_best_case(const LabeledDataset& ds, const ModelState& model,
                              std::size_t budget);
// (6) Poison the dataset; forget set = exactly the poisoned indices.
std::pair<LabeledDataset, ScenarioPlan> build_depoison_scenario(
    const LabeledDataset& ds, const PoisonSpec& spec, std::uint64_t seed);

}  // namespace ulbench

#include "ulbench/scenario.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace ulbench {

using nlohmann::json;

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kOneClass: return "one_class";
    case ScenarioKind::kAllClasses: return "all_classes";
    case ScenarioKind::kClassWise: return "class_wise";
    case ScenarioKind::kWorstCase: return "worst_case";
    case ScenarioKind::kBestCase: return "best_case";
    case ScenarioKind::kDepoison: return "depoison";
  }
  return "one_class";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "one_class") return ScenarioKind::kOneClass;
  if (s == "all_classes") return ScenarioKind::kAllClasses;
  if (s == "class_wise") return ScenarioKind::kClassWise;
  if (s == "worst_case") return ScenarioKind::kWorstCase;
  if (s == "best_case") return ScenarioKind::kBestCase;
  if (s == "depoison") return ScenarioKind::kDepoison;
  throw Error("unknown scenario kind '" + s + "'");
}

void ScenarioPlan::check_partition(std::size_t dataset_size) const {
  if (forget_indices.size() + retain_indices.size() != dataset_size)
    throw Error("scenario plan: partition does not cover the dataset");
  std::vector<bool> seen(dataset_size, false);
  for (auto i : forget_indices) {
    if (i >= dataset_size || seen[i]) throw Error("scenario plan: bad forget index");
    seen[i] = true;
  }
  for (auto i : retain_indices) {
    if (i >= dataset_size || seen[i]) throw Error("scenario plan: bad retain index");
    seen[i] = true;
  }
}

namespace {

ScenarioPlan make_plan(ScenarioKind kind, const LabeledDataset& ds,
                       std::vector<std::uint32_t> forget, std::uint64_t seed) {
  std::sort(forget.begin(), forget.end());
  ScenarioPlan plan;
  plan.kind = kind;
  plan.seed = seed;
  plan.budget = forget.size();
  plan.retain_indices.reserve(ds.size() - forget.size());
  std::size_t fi = 0;
  for (std::uint32_t i = 0; i < ds.size(); ++i) {
    if (fi < forget.size() && forget[fi] == i) {
      ++fi;
    } else {
      plan.retain_indices.push_back(i);
    }
  }
  plan.forget_indices = std::move(forget);
  plan.degenerate = plan.retain_indices.empty();
  plan.check_partition(ds.size());
  return plan;
}

// Indices of the `budget` smallest (or largest) values; ties broken by
// lower sample index, which the stable ordering of sort provides.
std::vector<std::uint32_t> ranked_indices(const std::vector<double>& losses,
                                          std::size_t budget, bool smallest) {
  std::vector<std::uint32_t> order(losses.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (losses[a] != losses[b])
                       return smallest ? losses[a] < losses[b]
                                       : losses[a] > losses[b];
                     return a < b;
                   });
  order.resize(budget);
  return order;
}

}  // namespace

ScenarioPlan select_one_class(const LabeledDataset& ds, int class_id,
                              std::size_t budget, std::uint64_t seed) {
  if (class_id < 0 || class_id >= ds.num_classes())
    throw Error("select_one_class: class out of range");
  const auto cls = ds.indices_of_class(class_id);
  if (budget > cls.size())
    throw Error("select_one_class: budget exceeds class population");
  Rng rng(sub_seed(seed, "one_class"));
  const auto pick = rng.sample_without_replacement(cls.size(), budget);
  std::vector<std::uint32_t> forget;
  forget.reserve(budget);
  for (auto p : pick) forget.push_back(cls[p]);
  auto plan = make_plan(ScenarioKind::kOneClass, ds, std::move(forget), seed);
  plan.target_class = class_id;
  return plan;
}

ScenarioPlan select_all_classes(const LabeledDataset& ds, std::size_t budget,
                                std::uint64_t seed) {
  if (budget > ds.size())
    throw Error("select_all_classes: budget exceeds dataset size");
  Rng rng(sub_seed(seed, "all_classes"));
  auto forget = rng.sample_without_replacement(ds.size(), budget);
  return make_plan(ScenarioKind::kAllClasses, ds, std::move(forget), seed);
}

ScenarioPlan select_class_wise(const LabeledDataset& ds, int class_id) {
  if (class_id < 0 || class_id >= ds.num_classes())
    throw Error("select_class_wise: class out of range");
  auto plan =
      make_plan(ScenarioKind::kClassWise, ds, ds.indices_of_class(class_id), 0);
  plan.target_class = class_id;
  return plan;
}

ScenarioPlan select_worst_case(const LabeledDataset& ds, const ModelState& model,
                               std::size_t budget) {
  if (budget > ds.size()) throw Error("select_worst_case: budget exceeds dataset");
  const auto losses = per_sample_loss(model, ds);
  return make_plan(ScenarioKind::kWorstCase, ds,
                   ranked_indices(losses, budget, /*smallest=*/true), 0);
}

ScenarioPlan select_best_case(const LabeledDataset& ds, const ModelState& model,
                              std::size_t budget) {
  if (budget > ds.size()) throw Error("select_best_case: budget exceeds dataset");
  const auto losses = per_sample_loss(model, ds);
  return make_plan(ScenarioKind::kBestCase, ds,
                   ranked_indices(losses, budget, /*smallest=*/false), 0);
}

std::pair<LabeledDataset, ScenarioPlan> build_depoison_scenario(
    const LabeledDataset& ds, const PoisonSpec& spec, std::uint64_t seed) {
  PoisonSpec eff = spec;
  eff.seed = seed;
  auto [poisoned, indices] = eff.kind == PoisonKind::kLabelFlip
                                 ? apply_label_flip(ds, eff)
                                 : apply_backdoor(ds, eff);
  auto plan = make_plan(ScenarioKind::kDepoison, poisoned, indices, seed);
  plan.poison = eff;
  if (eff.kind == PoisonKind::kBackdoor) plan.target_class = eff.target_class;
  return {std::move(poisoned), std::move(plan)};
}

std::string ScenarioPlan::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["seed"] = seed;
  j["budget"] = budget;
  j["degenerate"] = degenerate;
  if (target_class) j["target_class"] = *target_class;
  j["forget"] = forget_indices;
  j["retain"] = retain_indices;
  if (poison) {
    json p;
    p["kind"] = to_string(poison->kind);
    p["budget"] = poison->budget;
    p["trigger_size"] = poison->trigger_size;
    p["trigger_location"] = to_string(poison->trigger_location);
    p["trigger_value"] = poison->trigger_value;
    p["target_class"] = poison->target_class;
    p["seed"] = poison->seed;
    p["flip_pairs"] = poison->flip_pairs;
    j["poison"] = p;
  }
  return j.dump(2);
}

ScenarioPlan ScenarioPlan::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ScenarioPlan plan;
  plan.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.budget = j.at("budget").get<std::size_t>();
  plan.degenerate = j.value("degenerate", false);
  if (j.contains("target_class")) plan.target_class = j["target_class"].get<int>();
  plan.forget_indices = j.at("forget").get<std::vector<std::uint32_t>>();
  plan.retain_indices = j.at("retain").get<std::vector<std::uint32_t>>();
  if (j.contains("poison")) {
    const auto& p = j["poison"];
    PoisonSpec spec;
    spec.kind = poison_kind_from_string(p.at("kind").get<std::string>());
    spec.budget = p.at("budget").get<std::size_t>();
    spec.trigger_size = p.at("trigger_size").get<int>();
    spec.trigger_location =
        corner_from_string(p.at("trigger_location").get<std::string>());
    spec.trigger_value = p.at("trigger_value").get<float>();
    spec.target_class = p.at("target_class").get<int>();
    spec.seed = p.at("seed").get<std::uint64_t>();
    spec.flip_pairs = p.at("flip_pairs").get<std::vector<std::pair<int, int>>>();
    plan.poison = spec;
  }
  return plan;
}

}  // namespace ulbench

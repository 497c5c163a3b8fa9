#include "ulbench/unlearn.hpp"

#include <chrono>

namespace ulbench {

void UnlearnContext::check() const {
  if (!original || !dataset || !plan)
    throw Error("unlearn context: original/dataset/plan must be set");
  if (sub_retain_fraction < 0.0 || sub_retain_fraction > 1.0)
    throw Error("unlearn context: sub_retain_fraction must be in [0,1]");
}

std::vector<std::uint32_t> UnlearnContext::sub_retain_indices() const {
  check();
  const auto& retain = plan->retain_indices;
  std::size_t want = static_cast<std::size_t>(
      std::llround(sub_retain_fraction * static_cast<double>(retain.size())));
  if (want == 0 && !retain.empty()) want = std::min<std::size_t>(retain.size(), 1);
  Rng rng(sub_seed(train_config.seed, "sub_retain"));
  const auto pick = rng.sample_without_replacement(retain.size(), want);
  std::vector<std::uint32_t> out;
  out.reserve(want);
  for (auto p : pick) out.push_back(retain[p]);
  return out;
}

double UnlearnContext::param(const std::string& key) const {
  const auto it = method_params.find(key);
  if (it == method_params.end())
    throw Error("unlearn: missing hyperparameter '" + key + "'");
  return it->second;
}

const std::map<std::string, MethodInfo>& method_registry() {
  static const std::map<std::string, MethodInfo> registry = {
      {"retrain", {&retrain_unlearn, false, false, {}}},
      {"unrolling", {&unrolling_unlearn, false, true, {{"epochs", 5}}}},
      {"first_order", {&influence_first_order, false, false, {{"tau", 0.04}}}},
      {"second_order",
       {&influence_second_order, false, false,
        {{"damping", 0.01}, {"max_iters", 100}}}},
      {"fisher", {&fisher_unlearn, false, false, {{"alpha", 1e-7}}}},
      {"ssd", {&ssd_unlearn, false, false, {{"alpha", 10.0}, {"lambda", 1.0}}}},
      {"bad_t", {&bad_teacher_unlearn, false, false, {{"epochs", 5}}}},
      {"scrub", {&scrub_unlearn, false, false, {{"epochs", 3}}}},
      {"boundary_shrink",
       {&boundary_shrink, false, false,
        {{"epsilon", 8.0 / 255.0}, {"epochs", 5}}}},
      {"boundary_expand", {&boundary_expand, false, false, {{"epochs", 5}}}},
      {"salun",
       {&salun_unlearn, false, false, {{"fraction", 0.5}, {"epochs", 20}}}},
      {"l1_sparse",
       {&l1_sparse_unlearn, false, false,
        {{"gamma", 5e-4}, {"sparsity", 0.3}, {"epochs", 20}}}},
      {"pgu",
       {&pgu_unlearn, false, false,
        {{"energy", 0.95}, {"steps", 10}, {"lr", 0.01}}}},
      {"unsir",
       {&unsir_unlearn, true, false,
        {{"noise_steps", 20}, {"impair_epochs", 1}, {"repair_epochs", 3}}}},
      {"gkt",
       {&gkt_unlearn, true, false,
        {{"noise_steps", 40}, {"per_class", 16}, {"epochs", 5}}}},
      {"fcs", {&fcs_unlearn, false, false, {{"epochs", 2}, {"ft_epochs", 2}}}},
      {"msg", {&msg_unlearn, false, false, {{"q", 0.1}, {"epochs", 5}}}},
      {"ct", {&ct_unlearn, false, false, {{"epochs", 5}}}},
      {"niu",
       {&niu_unlearn, false, false,
        {{"n_layers", 1}, {"noise", 0.05}, {"layer_epochs", 1}, {"epochs", 5}}}},
  };
  return registry;
}

std::vector<std::string> registered_method_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, info] : method_registry()) ids.push_back(id);
  return ids;
}

MethodSpec make_method_spec(const std::string& id) {
  const auto& reg = method_registry();
  const auto it = reg.find(id);
  if (it == reg.end()) throw Error("unknown unlearning method '" + id + "'");
  MethodSpec spec;
  spec.method_id = id;
  spec.hyperparams = it->second.defaults;
  spec.requires_training_log = it->second.requires_training_log;
  spec.class_wise_only = it->second.class_wise_only;
  return spec;
}

UnlearnResult unlearn(const MethodSpec& spec, const UnlearnContext& ctx) {
  ctx.check();
  const auto& reg = method_registry();
  const auto it = reg.find(spec.method_id);
  if (it == reg.end())
    throw Error("unknown unlearning method '" + spec.method_id + "'");
  const MethodInfo& info = it->second;
  if (info.class_wise_only && ctx.plan->kind != ScenarioKind::kClassWise)
    throw Error("method '" + spec.method_id +
                "' only supports class-wise plans");

  // Merge defaults with overrides; reject keys the method does not declare.
  UnlearnContext run_ctx = ctx;
  run_ctx.method_params = info.defaults;
  const auto merge = [&](const std::map<std::string, double>& src) {
    for (const auto& [k, v] : src) {
      if (info.defaults.find(k) == info.defaults.end())
        throw Error("method '" + spec.method_id +
                    "': unknown hyperparameter '" + k + "'");
      run_ctx.method_params[k] = v;
    }
  };
  merge(spec.hyperparams);
  merge(ctx.method_params);

  if (!run_ctx.artifact_store.empty())
    std::filesystem::create_directories(run_ctx.artifact_store);
  const std::uint64_t bytes_before = dir_bytes(run_ctx.artifact_store);

  const auto t0 = std::chrono::steady_clock::now();
  UnlearnResult result = info.fn(run_ctx);
  const auto t1 = std::chrono::steady_clock::now();

  result.method_id = spec.method_id;
  result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  const std::uint64_t bytes_after = dir_bytes(run_ctx.artifact_store);
  // Pre-existing artifacts (e.g. a recorded training log) count as the
  // method's auxiliary storage as well.
  result.aux_storage_bytes = std::max(result.aux_storage_bytes, bytes_after);
  (void)bytes_before;
  return result;
}

}  // namespace ulbench

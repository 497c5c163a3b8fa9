#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ulbench/grad.hpp"
#include "ulbench/scenario.hpp"
#include "ulbench/train.hpp"

namespace ulbench {

struct UnlearnContext {
  const ModelState* original = nullptr;
  const LabeledDataset* dataset = nullptr;
  const ScenarioPlan* plan = nullptr;
  double sub_retain_fraction = 0.1;
  TrainConfig train_config;  // the original model's training configuration
  std::map<std::string, double> method_params;
  std::filesystem::path artifact_store;

  void check() const;
  // Deterministic sample of sub_retain_fraction of the retain set; the
  // fine-tuning data budget every utility-preserving phase draws from.
  std::vector<std::uint32_t> sub_retain_indices() const;
  double param(const std::string& key) const;
};

struct UnlearnResult {
  ModelState model;
  double wall_seconds = 0.0;
  std::uint64_t aux_storage_bytes = 0;
  std::string method_id;
  // Method-reported extras (e.g. fraction of failed adversarial steps).
  std::map<std::string, double> diagnostics;
};

struct MethodSpec {
  std::string method_id;
  std::map<std::string, double> hyperparams;
  bool requires_training_log = false;
  bool class_wise_only = false;
};

using UnlearnFn = UnlearnResult (*)(const UnlearnContext&);

struct MethodInfo {
  UnlearnFn fn = nullptr;
  bool class_wise_only = false;
  bool requires_training_log = false;
  std::map<std::string, double> defaults;
};

// The dispatchable method catalog. SISA and Amnesiac have their own
// two-phase interfaces (sisa.hpp, amnesiac_* below) and are not listed here.
const std::map<std::string, MethodInfo>& method_registry();
std::vector<std::string> registered_method_ids();
MethodSpec make_method_spec(const std::string& id);

// Uniform entry point: validates the spec, merges hyperparameter defaults
// (unknown keys are rejected), runs the method, and fills in wall time and
// artifact-store byte counts.
UnlearnResult unlearn(const MethodSpec& spec, const UnlearnContext& ctx);

// Individual methods (exposed for direct testing).
UnlearnResult retrain_unlearn(const UnlearnContext& ctx);
UnlearnResult unrolling_unlearn(const UnlearnContext& ctx);
UnlearnResult influence_first_order(const UnlearnContext& ctx);
UnlearnResult influence_second_order(const UnlearnContext& ctx);
UnlearnResult fisher_unlearn(const UnlearnContext& ctx);
UnlearnResult ssd_unlearn(const UnlearnContext& ctx);
UnlearnResult bad_teacher_unlearn(const UnlearnContext& ctx);
UnlearnResult scrub_unlearn(const UnlearnContext& ctx);
UnlearnResult boundary_shrink(const UnlearnContext& ctx);
UnlearnResult boundary_expand(const UnlearnContext& ctx);
UnlearnResult salun_unlearn(const UnlearnContext& ctx);
UnlearnResult l1_sparse_unlearn(const UnlearnContext& ctx);
UnlearnResult pgu_unlearn(const UnlearnContext& ctx);
UnlearnResult unsir_unlearn(const UnlearnContext& ctx);
UnlearnResult gkt_unlearn(const UnlearnContext& ctx);
UnlearnResult fcs_unlearn(const UnlearnContext& ctx);
UnlearnResult msg_unlearn(const UnlearnContext& ctx);
UnlearnResult ct_unlearn(const UnlearnContext& ctx);
UnlearnResult niu_unlearn(const UnlearnContext& ctx);

// SalUn saliency mask: 1 for the top-`fraction` parameters ranked by the
// magnitude of the forget-set gradient.
std::vector<std::uint8_t> salun_mask(const ModelState& model,
                                     const LabeledDataset& ds,
                                     const std::vector<std::uint32_t>& forget_indices,
                                     double fraction);

// Amnesiac: per-batch update log captured during original training, and the
// subtraction-based unlearner that consumes it.
struct AmnesiacLog {
  std::vector<std::vector<std::uint32_t>> batch_indices;
  std::vector<std::vector<float>> batch_deltas;

  void save(const std::filesystem::path& path) const;
  static AmnesiacLog load(const std::filesystem::path& path);
};

// Hooks to install on the original training run; appends to `log`.
TrainHooks amnesiac_record(AmnesiacLog& log);

// Subtracts the recorded updates of every batch containing a forget sample,
// then fine-tunes on the sub-retain set. Expects amnesiac_log.bin in the
// artifact store (or an in-memory log).
UnlearnResult amnesiac_unlearn(const UnlearnContext& ctx);
UnlearnResult amnesiac_unlearn(const UnlearnContext& ctx, const AmnesiacLog& log);

// Conjugate-gradient solve of (H + damping I) x = b where H is the mean CE
// Hessian over the given batch, in double precision. Returns the iterate and
// whether the residual tolerance was reached within max_iters.
struct CgResult {
  std::vector<double> x;
  bool converged = false;
  int iters = 0;
};
CgResult cg_solve_hessian(const Arch& arch, const std::vector<double>& params,
                          const Batch<double>& batch, const std::vector<double>& b,
                          double damping, int max_iters, double tol = 1e-10);

}  // namespace ulbench

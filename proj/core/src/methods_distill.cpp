#include "method_util.hpp"

namespace ulbench {

using detail::kMethodLr;
using detail::sgd_epoch;
using detail::teacher_probs;

// Competent/incompetent teacher distillation: the student chases the original
// model on retained data and a randomly initialized network on forget data.
UnlearnResult bad_teacher_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "bad_t";
  if (epochs == 0) return res;

  const auto& arch = ctx.original->arch;
  const auto sub = ctx.sub_retain_indices();
  const auto& forget = ctx.plan->forget_indices;
  const std::vector<float> bad_params =
      init_params(arch, sub_seed(ctx.train_config.seed, "bad_teacher"));

  // Interleave both pools into one index list with per-sample targets.
  std::vector<std::uint32_t> all = sub;
  all.insert(all.end(), forget.begin(), forget.end());
  auto targets = teacher_probs(arch, ctx.original->params, *ctx.dataset, sub);
  auto bad = teacher_probs(arch, bad_params, *ctx.dataset, forget);
  targets.insert(targets.end(), std::make_move_iterator(bad.begin()),
                 std::make_move_iterator(bad.end()));

  Rng rng(sub_seed(ctx.train_config.seed, "bad_t"));
  for (int e = 0; e < epochs; ++e)
    sgd_epoch(res.model, *ctx.dataset, all, &targets, +1.0, rng);
  return res;
}

// SCRUB: alternate gradient-ascent steps that push the student away from the
// teacher on the forget set with descent steps that pin it to the teacher
// (plus the task loss) on retained data. Ascent stops once retain loss
// drifts past a divergence guard.
UnlearnResult scrub_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "scrub";
  if (epochs == 0) return res;

  const auto& arch = ctx.original->arch;
  const auto sub = ctx.sub_retain_indices();
  const auto& forget = ctx.plan->forget_indices;
  const auto forget_targets =
      teacher_probs(arch, ctx.original->params, *ctx.dataset, forget);
  const auto retain_targets =
      teacher_probs(arch, ctx.original->params, *ctx.dataset, sub);

  const auto retain_batch = make_batch(*ctx.dataset, sub);
  const double initial_loss =
      ce_batch_loss(arch, ctx.original->params, retain_batch);
  const double guard = 3.0 * initial_loss + 1.0;

  Rng rng(sub_seed(ctx.train_config.seed, "scrub"));
  int skipped = 0;
  for (int e = 0; e < epochs; ++e) {
    const double retain_loss = ce_batch_loss(arch, res.model.params, retain_batch);
    if (!forget.empty() && retain_loss <= guard)
      sgd_epoch(res.model, *ctx.dataset, forget, &forget_targets, -1.0, rng);
    else if (!forget.empty())
      ++skipped;
    // Descent: distillation toward the teacher, then the task loss itself.
    sgd_epoch(res.model, *ctx.dataset, sub, &retain_targets, +1.0, rng);
    sgd_epoch(res.model, *ctx.dataset, sub, nullptr, +1.0, rng);
  }
  res.diagnostics["ascent_epochs_skipped"] = skipped;
  return res;
}

// Forget-then-recover: gradient ascent on the forget set's task loss followed
// by fine-tuning on the sub-retain set.
UnlearnResult fcs_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int epochs = static_cast<int>(ctx.param("epochs"));
  const int ft_epochs = static_cast<int>(ctx.param("ft_epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "fcs";

  Rng rng(sub_seed(ctx.train_config.seed, "fcs"));
  if (!ctx.plan->forget_indices.empty())
    for (int e = 0; e < epochs; ++e)
      sgd_epoch(res.model, *ctx.dataset, ctx.plan->forget_indices, nullptr, -1.0,
                rng);
  res.model = fine_tune(res.model, *ctx.dataset, ctx.sub_retain_indices(),
                        ft_epochs, kMethodLr,
                        sub_seed(ctx.train_config.seed, "fcs_ft"));
  return res;
}

}  // namespace ulbench

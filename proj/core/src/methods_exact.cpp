#include "ulbench/unlearn.hpp"

namespace ulbench {

// Gold standard: train from scratch on the retain set with the original
// configuration and a fresh seed.
UnlearnResult retrain_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  if (ctx.plan->retain_indices.empty())
    throw Error("retrain: empty retain set");
  TrainConfig cfg = ctx.train_config;
  cfg.seed = sub_seed(ctx.train_config.seed, "retrain");
  TrainOptions opts;
  opts.indices = &ctx.plan->retain_indices;
  UnlearnResult res;
  res.model = train(*ctx.dataset, ctx.original->arch, cfg, opts);
  res.method_id = "retrain";
  return res;
}

}  // namespace ulbench

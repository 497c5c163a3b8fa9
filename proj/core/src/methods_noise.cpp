#include "method_util.hpp"

namespace ulbench {

using detail::sgd_epoch;
using detail::teacher_probs;

namespace {

constexpr double kNoiseLr = 0.1;

// Gradient steps on a synthetic input toward lower (sign=+1) or higher
// (sign=-1) cross-entropy against `label` under a frozen model. Returns the
// final loss.
double optimize_noise(const Arch& arch, const std::vector<float>& params,
                      std::vector<float>& x, int label, int steps, double sign) {
  std::vector<float> gin;
  double loss = 0.0;
  for (int s = 0; s < steps; ++s) {
    loss = input_ce_gradient(arch, params, x.data(), label, gin);
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] -= static_cast<float>(sign * kNoiseLr) * gin[j];
  }
  return loss;
}

}  // namespace

// UNSIR: learn error-maximizing noise for the forget class, impair the model
// by training on that noise (labeled as the forget class) mixed with retained
// samples, then repair on the retained samples alone.
UnlearnResult unsir_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int noise_steps = static_cast<int>(ctx.param("noise_steps"));
  const int impair_epochs = static_cast<int>(ctx.param("impair_epochs"));
  const int repair_epochs = static_cast<int>(ctx.param("repair_epochs"));
  if (!ctx.plan->target_class)
    throw Error("unsir: plan has no target class");
  const int f = *ctx.plan->target_class;

  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "unsir";
  if (impair_epochs == 0 && repair_epochs == 0) return res;

  const Arch& arch = ctx.original->arch;
  const std::size_t in_size = arch.input.size();
  const auto sub = ctx.sub_retain_indices();

  constexpr int kNoiseSamples = 20;
  std::vector<float> mix_data;
  std::vector<int> mix_labels;
  mix_data.reserve((sub.size() + kNoiseSamples) * in_size);
  for (auto i : sub) {
    const float* p = ctx.dataset->input(i);
    mix_data.insert(mix_data.end(), p, p + in_size);
    mix_labels.push_back(ctx.dataset->label(i));
  }
  Rng rng(sub_seed(ctx.train_config.seed, "unsir_noise"));
  double final_loss = 0.0;
  for (int k = 0; k < kNoiseSamples; ++k) {
    std::vector<float> x(in_size);
    for (auto& v : x) v = static_cast<float>(rng.uniform());
    final_loss = optimize_noise(arch, ctx.original->params, x, f, noise_steps,
                                /*sign=*/-1.0);
    mix_data.insert(mix_data.end(), x.begin(), x.end());
    mix_labels.push_back(f);
  }
  res.diagnostics["noise_loss"] = final_loss;

  const LabeledDataset mix("unsir_mix", ctx.dataset->shape(),
                           ctx.dataset->num_classes(), Split::kTrain,
                           std::move(mix_data), std::move(mix_labels));
  Rng train_rng(sub_seed(ctx.train_config.seed, "unsir"));
  const auto all = mix.all_indices();
  for (int e = 0; e < impair_epochs; ++e)
    sgd_epoch(res.model, mix, all, nullptr, +1.0, train_rng);
  res.model = fine_tune(res.model, *ctx.dataset, sub, repair_epochs,
                        detail::kMethodLr,
                        sub_seed(ctx.train_config.seed, "unsir_repair"));
  return res;
}

// Data-free class removal: synthesize high-confidence pseudo-samples for every
// retained class under the frozen teacher, then distill a freshly initialized
// student on them. The forget class is simply never represented.
UnlearnResult gkt_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int noise_steps = static_cast<int>(ctx.param("noise_steps"));
  const int per_class = static_cast<int>(ctx.param("per_class"));
  const int epochs = static_cast<int>(ctx.param("epochs"));
  if (!ctx.plan->target_class)
    throw Error("gkt: plan has no target class");
  const int f = *ctx.plan->target_class;
  if (per_class <= 0) throw Error("gkt: per_class must be positive");

  const Arch& arch = ctx.original->arch;
  const std::size_t in_size = arch.input.size();
  const int C = arch.num_classes;

  std::vector<float> data;
  std::vector<int> labels;
  Rng rng(sub_seed(ctx.train_config.seed, "gkt_noise"));
  for (int c = 0; c < C; ++c) {
    if (c == f) continue;
    for (int k = 0; k < per_class; ++k) {
      std::vector<float> x(in_size);
      for (auto& v : x) v = static_cast<float>(rng.uniform());
      optimize_noise(arch, ctx.original->params, x, c, noise_steps,
                     /*sign=*/+1.0);
      data.insert(data.end(), x.begin(), x.end());
      labels.push_back(c);
    }
  }
  const LabeledDataset pseudo("gkt_pseudo", ctx.dataset->shape(), C,
                              Split::kTrain, std::move(data), std::move(labels));

  UnlearnResult res;
  res.model.arch = arch;
  res.model.params =
      init_params(arch, sub_seed(ctx.train_config.seed, "gkt_student"));
  res.model.seed = ctx.original->seed;
  res.model.trained_on = ctx.original->trained_on;
  res.method_id = "gkt";

  const auto all = pseudo.all_indices();
  const auto targets = teacher_probs(arch, ctx.original->params, pseudo, all);
  Rng train_rng(sub_seed(ctx.train_config.seed, "gkt"));
  for (int e = 0; e < epochs; ++e)
    sgd_epoch(res.model, pseudo, all, &targets, +1.0, train_rng);
  return res;
}

}  // namespace ulbench

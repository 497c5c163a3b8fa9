#include <algorithm>
#include <numeric>

#include "method_util.hpp"

namespace ulbench {

using detail::kMethodLr;
using detail::sgd_epoch;

namespace {

// Predicted class for a single raw input buffer.
int predict_raw(const Arch& arch, const std::vector<float>& params,
                const float* input) {
  Workspace<float> ws;
  net_forward(arch, params.data(), input, ws);
  return argmax_lowest(ws.act.back().data(), arch.num_classes);
}

// Second-highest logit class (the nearest decision boundary if the top class
// is the true label).
int runner_up(const Arch& arch, const std::vector<float>& params,
              const float* input, int avoid) {
  Workspace<float> ws;
  net_forward(arch, params.data(), input, ws);
  const float* z = ws.act.back().data();
  int best = -1;
  for (int c = 0; c < arch.num_classes; ++c) {
    if (c == avoid) continue;
    if (best < 0 || z[c] > z[best]) best = c;
  }
  return best;
}

}  // namespace

// Boundary shrinking: relabel each forget sample with the class of its
// FGSM neighbor (the label across the nearest decision boundary) and
// fine-tune on the forget set under those labels.
UnlearnResult boundary_shrink(const UnlearnContext& ctx) {
  ctx.check();
  const double epsilon = ctx.param("epsilon");
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "boundary_shrink";
  if (epochs == 0 || ctx.plan->forget_indices.empty()) return res;

  const auto& arch = ctx.original->arch;
  const std::size_t in_size = arch.input.size();
  std::vector<int> labels(ctx.dataset->labels());
  std::vector<std::uint32_t> fooled_count(kParallelChunks, 0);
  const auto& forget = ctx.plan->forget_indices;
  std::vector<int> adv_labels(forget.size());
  parallel_chunks(forget.size(), [&](int chunk, std::size_t b, std::size_t e) {
    std::vector<float> gin, x(in_size);
    for (std::size_t k = b; k < e; ++k) {
      const auto i = forget[k];
      const int y = ctx.dataset->label(i);
      input_ce_gradient(arch, ctx.original->params, ctx.dataset->input(i), y, gin);
      const float* x0 = ctx.dataset->input(i);
      for (std::size_t j = 0; j < in_size; ++j) {
        const float s = gin[j] > 0 ? 1.0f : (gin[j] < 0 ? -1.0f : 0.0f);
        x[j] = x0[j] + static_cast<float>(epsilon) * s;
      }
      int pred = predict_raw(arch, ctx.original->params, x.data());
      if (pred == y)
        pred = runner_up(arch, ctx.original->params, x.data(), y);
      else
        ++fooled_count[chunk];
      adv_labels[k] = pred;
    }
  });
  for (std::size_t k = 0; k < forget.size(); ++k)
    labels[forget[k]] = adv_labels[k];

  Rng rng(sub_seed(ctx.train_config.seed, "boundary_shrink"));
  for (int e = 0; e < epochs; ++e)
    sgd_epoch(res.model, *ctx.dataset, forget, nullptr, +1.0, rng, &labels);
  res.diagnostics["fgsm_fooled"] = static_cast<double>(
      std::accumulate(fooled_count.begin(), fooled_count.end(), 0u));
  return res;
}

// Boundary expanding: widen the classifier with one shadow logit, push the
// forget samples into the shadow class, then discard the extra logit.
UnlearnResult boundary_expand(const UnlearnContext& ctx) {
  ctx.check();
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "boundary_expand";
  if (epochs == 0 || ctx.plan->forget_indices.empty()) return res;

  const Arch& arch = ctx.original->arch;
  const Arch wide = widen_output(arch, 1);
  const LayerSpec& head = arch.layers.back();
  const std::size_t head_off = arch.param_offsets().back();
  const std::size_t w_count = static_cast<std::size_t>(head.out_dim) * head.in_dim;

  // Copy parameters into the widened layout: one extra weight row and bias.
  ModelState widened;
  widened.arch = wide;
  widened.params = init_params(wide, sub_seed(ctx.train_config.seed, "expand"));
  std::copy_n(ctx.original->params.begin(), head_off + w_count,
              widened.params.begin());
  std::copy_n(ctx.original->params.begin() + head_off + w_count, head.out_dim,
              widened.params.begin() + head_off + w_count + head.in_dim);
  widened.seed = ctx.original->seed;

  std::vector<int> labels(ctx.dataset->labels());
  for (auto i : ctx.plan->forget_indices) labels[i] = arch.num_classes;
  Rng rng(sub_seed(ctx.train_config.seed, "boundary_expand"));
  for (int e = 0; e < epochs; ++e)
    sgd_epoch(widened, *ctx.dataset, ctx.plan->forget_indices, nullptr, +1.0,
              rng, &labels);

  // Prune the shadow logit back out.
  std::copy_n(widened.params.begin(), head_off + w_count, res.model.params.begin());
  std::copy_n(widened.params.begin() + head_off + w_count + head.in_dim,
              head.out_dim, res.model.params.begin() + head_off + w_count);
  return res;
}

std::vector<std::uint8_t> salun_mask(const ModelState& model,
                                     const LabeledDataset& ds,
                                     const std::vector<std::uint32_t>& forget_indices,
                                     double fraction) {
  if (fraction < 0.0 || fraction > 1.0)
    throw Error("salun_mask: fraction must be in [0,1]");
  const std::size_t np = model.arch.param_count();
  std::vector<std::uint8_t> mask(np, 0);
  const std::size_t want =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(np)));
  if (want == 0 || forget_indices.empty()) return mask;

  const auto batch = make_batch(ds, forget_indices);
  std::vector<float> g;
  ce_batch_gradient(model.arch, model.params, batch, g, /*mean=*/true);
  std::vector<std::size_t> order(np);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const float ma = std::abs(g[a]), mb = std::abs(g[b]);
    return ma != mb ? ma > mb : a < b;
  });
  for (std::size_t k = 0; k < want && k < np; ++k) mask[order[k]] = 1;
  return mask;
}

// Saliency-masked random-label fine-tuning: update only the parameters most
// sensitive to the forget set while training on forget samples with random
// wrong labels plus retained samples with their true labels.
UnlearnResult salun_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const double fraction = ctx.param("fraction");
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "salun";
  if (epochs == 0 || fraction == 0.0 || ctx.plan->forget_indices.empty())
    return res;

  const auto mask =
      salun_mask(*ctx.original, *ctx.dataset, ctx.plan->forget_indices, fraction);

  std::vector<int> labels(ctx.dataset->labels());
  Rng label_rng(sub_seed(ctx.train_config.seed, "salun_labels"));
  const int C = ctx.dataset->num_classes();
  for (auto i : ctx.plan->forget_indices) {
    const int shift =
        1 + static_cast<int>(label_rng.uniform_index(static_cast<std::size_t>(C - 1)));
    labels[i] = (ctx.dataset->label(i) + shift) % C;
  }

  std::vector<std::uint32_t> pool = ctx.sub_retain_indices();
  pool.insert(pool.end(), ctx.plan->forget_indices.begin(),
              ctx.plan->forget_indices.end());
  TrainOptions extra;
  extra.label_override = &labels;
  extra.update_mask = &mask;
  res.model = fine_tune(res.model, *ctx.dataset, pool, epochs, kMethodLr,
                        sub_seed(ctx.train_config.seed, "salun"), extra);
  return res;
}

}  // namespace ulbench

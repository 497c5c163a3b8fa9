#include <algorithm>
#include <numeric>

#include <Eigen/Dense>

#include "method_util.hpp"

namespace ulbench {

using detail::kMethodLr;
using detail::sgd_epoch;

// Sparsity-aware unlearning: l1-penalized fine-tuning on the sub-retain set
// followed by magnitude pruning of the smallest weights.
UnlearnResult l1_sparse_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const double gamma = ctx.param("gamma");
  const double sparsity = ctx.param("sparsity");
  const int epochs = static_cast<int>(ctx.param("epochs"));
  if (sparsity < 0.0 || sparsity > 1.0)
    throw Error("l1_sparse: sparsity must be in [0,1]");
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "l1_sparse";

  TrainOptions extra;
  extra.l1_penalty = gamma;
  res.model = fine_tune(res.model, *ctx.dataset, ctx.sub_retain_indices(), epochs,
                        kMethodLr, sub_seed(ctx.train_config.seed, "l1_sparse"),
                        extra);

  const std::size_t np = res.model.params.size();
  const std::size_t prune =
      static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(np)));
  if (prune > 0) {
    std::vector<std::size_t> order(np);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const float ma = std::abs(res.model.params[a]);
      const float mb = std::abs(res.model.params[b]);
      return ma != mb ? ma < mb : a < b;
    });
    for (std::size_t k = 0; k < prune; ++k) res.model.params[order[k]] = 0.0f;
  }
  res.diagnostics["pruned_params"] = static_cast<double>(prune);
  return res;
}

// Reset the q-fraction of parameters most salient to the forget set back to a
// fresh initialization, then recover on the sub-retain set.
UnlearnResult msg_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const double q = ctx.param("q");
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "msg";
  if (q == 0.0 || ctx.plan->forget_indices.empty()) {
    res.model = fine_tune(res.model, *ctx.dataset, ctx.sub_retain_indices(),
                          epochs, kMethodLr,
                          sub_seed(ctx.train_config.seed, "msg_ft"));
    return res;
  }

  const auto mask =
      salun_mask(*ctx.original, *ctx.dataset, ctx.plan->forget_indices, q);
  const auto fresh = init_params(ctx.original->arch,
                                 sub_seed(ctx.train_config.seed, "msg_reinit"));
  std::size_t reset = 0;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) {
      res.model.params[j] = fresh[j];
      ++reset;
    }
  res.diagnostics["reset_params"] = static_cast<double>(reset);
  res.model = fine_tune(res.model, *ctx.dataset, ctx.sub_retain_indices(), epochs,
                        kMethodLr, sub_seed(ctx.train_config.seed, "msg_ft"));
  return res;
}

// Confusion training: fine-tune on forget samples under random wrong labels
// mixed with retained samples under their true labels.
UnlearnResult ct_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "ct";
  if (epochs == 0 || ctx.plan->forget_indices.empty()) return res;

  std::vector<int> labels(ctx.dataset->labels());
  Rng label_rng(sub_seed(ctx.train_config.seed, "ct_labels"));
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
  res.model = fine_tune(res.model, *ctx.dataset, pool, epochs, kMethodLr,
                        sub_seed(ctx.train_config.seed, "ct"), extra);
  return res;
}

// Layer-wise noise injection and repair, from the classifier head backwards.
UnlearnResult niu_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int n_layers = static_cast<int>(ctx.param("n_layers"));
  const double noise = ctx.param("noise");
  const int layer_epochs = static_cast<int>(ctx.param("layer_epochs"));
  const int epochs = static_cast<int>(ctx.param("epochs"));
  if (n_layers < 0) throw Error("niu: n_layers must be non-negative");
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "niu";

  const Arch& arch = ctx.original->arch;
  const auto offsets = arch.param_offsets();
  const auto sub = ctx.sub_retain_indices();
  Rng rng(sub_seed(ctx.train_config.seed, "niu"));

  // Parametric layers, innermost-first from the output.
  std::vector<std::size_t> parametric;
  for (std::size_t l = 0; l < arch.layers.size(); ++l)
    if (arch.layers[l].param_count() > 0) parametric.push_back(l);
  std::reverse(parametric.begin(), parametric.end());
  const int limit = std::min<int>(n_layers, static_cast<int>(parametric.size()));

  for (int k = 0; k < limit; ++k) {
    const std::size_t l = parametric[k];
    const std::size_t off = offsets[l];
    const std::size_t cnt = arch.layers[l].param_count();
    if (noise != 0.0)
      for (std::size_t j = off; j < off + cnt; ++j)
        res.model.params[j] += static_cast<float>(noise * rng.normal());
    if (layer_epochs > 0) {
      std::vector<std::uint8_t> mask(arch.param_count(), 0);
      std::fill(mask.begin() + off, mask.begin() + off + cnt, 1);
      TrainOptions extra;
      extra.update_mask = &mask;
      res.model = fine_tune(res.model, *ctx.dataset, sub, layer_epochs, kMethodLr,
                            sub_seed(ctx.train_config.seed, "niu_layer", k), extra);
    }
  }
  res.model = fine_tune(res.model, *ctx.dataset, sub, epochs, kMethodLr,
                        sub_seed(ctx.train_config.seed, "niu_ft"));
  return res;
}

// Gradient-projection unlearning: ascend the forget loss restricted to the
// subspace orthogonal to the dominant sub-retain gradient directions, so the
// retained behavior is (approximately) preserved.
UnlearnResult pgu_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const double energy = ctx.param("energy");
  const int steps = static_cast<int>(ctx.param("steps"));
  const double lr = ctx.param("lr");
  if (energy < 0.0 || energy > 1.0) throw Error("pgu: energy must be in [0,1]");
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "pgu";
  if (steps == 0 || lr == 0.0 || ctx.plan->forget_indices.empty()) return res;

  const Arch& arch = ctx.original->arch;
  const std::size_t np = arch.param_count();

  // Basis of the retained gradient space from a capped sample of per-sample
  // gradients, truncated at the requested spectral energy.
  auto sub = ctx.sub_retain_indices();
  constexpr std::size_t kMaxCols = 64;
  if (sub.size() > kMaxCols) sub.resize(kMaxCols);
  Eigen::MatrixXd G(np, sub.size());
  {
    std::vector<float> g;
    for (std::size_t c = 0; c < sub.size(); ++c) {
      const auto i = sub[c];
      sample_ce_gradient(arch, ctx.original->params, ctx.dataset->input(i),
                         ctx.dataset->label(i), g);
      for (std::size_t j = 0; j < np; ++j) G(j, c) = static_cast<double>(g[j]);
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  double total = 0.0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) total += sv[k] * sv[k];
  Eigen::Index rank = 0;
  double acc = 0.0;
  while (rank < sv.size() && total > 0.0 && acc < energy * total) {
    acc += sv[rank] * sv[rank];
    ++rank;
  }
  const Eigen::MatrixXd U = svd.matrixU().leftCols(rank);

  const auto forget_batch = make_batch(*ctx.dataset, ctx.plan->forget_indices);
  std::vector<float> g(np);
  Eigen::VectorXd gv(np);
  for (int s = 0; s < steps; ++s) {
    ce_batch_gradient(arch, res.model.params, forget_batch, g, /*mean=*/true);
    for (std::size_t j = 0; j < np; ++j) gv[j] = static_cast<double>(g[j]);
    if (rank > 0) gv -= U * (U.transpose() * gv);
    for (std::size_t j = 0; j < np; ++j)
      res.model.params[j] += static_cast<float>(lr * gv[j]);
  }
  res.diagnostics["projection_rank"] = static_cast<double>(rank);
  return res;
}

}  // namespace ulbench

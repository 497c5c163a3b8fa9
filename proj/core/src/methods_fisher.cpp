#include <cmath>

#include "ulbench/unlearn.hpp"

namespace ulbench {

namespace {

// Diagonal of the empirical Fisher information: mean of squared per-sample
// CE gradients. Chunk-ordered accumulation keeps the result deterministic.
std::vector<double> diag_fisher(const Arch& arch, const std::vector<float>& params,
                                const LabeledDataset& ds,
                                const std::vector<std::uint32_t>& indices) {
  const std::size_t np = arch.param_count();
  std::vector<double> fim(np, 0.0);
  if (indices.empty()) return fim;
  std::vector<std::vector<double>> chunk(kParallelChunks);
  parallel_chunks(indices.size(), [&](int c, std::size_t b, std::size_t e) {
    auto& acc = chunk[c];
    acc.assign(np, 0.0);
    std::vector<float> g;
    for (std::size_t k = b; k < e; ++k) {
      const auto i = indices[k];
      sample_ce_gradient(arch, params, ds.input(i), ds.label(i), g);
      for (std::size_t j = 0; j < np; ++j) {
        const double gj = static_cast<double>(g[j]);
        acc[j] += gj * gj;
      }
    }
  });
  for (int c = 0; c < kParallelChunks; ++c)
    if (!chunk[c].empty())
      for (std::size_t j = 0; j < np; ++j) fim[j] += chunk[c][j];
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (auto& f : fim) f *= inv;
  return fim;
}

}  // namespace

// Fisher forgetting: scrub parameters with Gaussian noise whose per-parameter
// variance is inversely proportional to the retain-set Fisher information, so
// weights the retain set does not constrain are perturbed the most.
UnlearnResult fisher_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const double alpha = ctx.param("alpha");
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "fisher";
  if (alpha == 0.0 || ctx.plan->forget_indices.empty()) return res;

  const auto fim = diag_fisher(ctx.original->arch, ctx.original->params,
                               *ctx.dataset, ctx.sub_retain_indices());
  Rng rng(sub_seed(ctx.train_config.seed, "fisher"));
  constexpr double kFloor = 1e-8;
  for (std::size_t j = 0; j < res.model.params.size(); ++j) {
    const double sigma = std::sqrt(alpha / std::max(fim[j], kFloor));
    res.model.params[j] += static_cast<float>(sigma * rng.normal());
  }
  return res;
}

// Selective synaptic dampening: shrink exactly those parameters that matter
// far more to the forget set than to the retain set.
UnlearnResult ssd_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const double alpha = ctx.param("alpha");    // selection threshold
  const double lambda = ctx.param("lambda");  // dampening strength
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "ssd";
  if (ctx.plan->forget_indices.empty()) return res;

  const auto& arch = ctx.original->arch;
  const auto fim_f =
      diag_fisher(arch, ctx.original->params, *ctx.dataset, ctx.plan->forget_indices);
  const auto fim_r = diag_fisher(arch, ctx.original->params, *ctx.dataset,
                                 ctx.sub_retain_indices());
  std::size_t dampened = 0;
  for (std::size_t j = 0; j < res.model.params.size(); ++j) {
    if (fim_f[j] <= alpha * fim_r[j]) continue;
    const double beta =
        std::min(lambda * fim_r[j] / std::max(fim_f[j], 1e-30), 1.0);
    res.model.params[j] = static_cast<float>(beta * res.model.params[j]);
    ++dampened;
  }
  res.diagnostics["dampened_params"] = static_cast<double>(dampened);
  return res;
}

}  // namespace ulbench

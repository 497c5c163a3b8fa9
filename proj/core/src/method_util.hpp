#pragma once

// Shared internals for the unlearning method implementations: plain SGD
// epochs with optional distillation targets or loss ascent. Not installed.

#include <cmath>

#include "ulbench/unlearn.hpp"

namespace ulbench::detail {

inline constexpr int kMethodBatch = 32;
inline constexpr double kMethodLr = 0.01;

// Teacher soft targets for a fixed index list, computed once per phase.
inline std::vector<std::vector<float>> teacher_probs(
    const Arch& arch, const std::vector<float>& params, const LabeledDataset& ds,
    const std::vector<std::uint32_t>& indices) {
  std::vector<std::vector<float>> out(indices.size());
  const int C = arch.num_classes;
  parallel_chunks(indices.size(), [&](int, std::size_t b, std::size_t e) {
    Workspace<float> ws;
    for (std::size_t k = b; k < e; ++k) {
      net_forward(arch, params.data(), ds.input(indices[k]), ws);
      out[k].resize(C);
      softmax(ws.act.back().data(), C, out[k].data());
    }
  });
  return out;
}

// Mean KL(teacher || student) over the batch; d/dlogits = p_s - p_t.
inline double kl_batch_gradient(const Arch& arch, const std::vector<float>& params,
                                const Batch<float>& batch,
                                const std::vector<const float*>& targets,
                                std::vector<float>& grad) {
  const int C = arch.num_classes;
  LogitGradFn<float> fn = [&](std::size_t k, const float* logits, float* dl) {
    std::vector<float> ps(C);
    softmax(logits, C, ps.data());
    const float* pt = targets[k];
    double kl = 0.0;
    for (int c = 0; c < C; ++c) {
      dl[c] = ps[c] - pt[c];
      const double t = std::max(static_cast<double>(pt[c]), 1e-12);
      const double s = std::max(static_cast<double>(ps[c]), 1e-12);
      kl += t * (std::log(t) - std::log(s));
    }
    return kl;
  };
  return batch_gradient(arch, params, batch, fn, grad, /*mean=*/true);
}

// One epoch of plain SGD over `indices`, minimizing (sign=+1) or maximizing
// (sign=-1) the loss. `targets` switches from cross-entropy to distillation.
// Returns the mean per-batch loss seen during the epoch.
inline double sgd_epoch(ModelState& model, const LabeledDataset& ds,
                        const std::vector<std::uint32_t>& indices,
                        const std::vector<std::vector<float>>* targets,
                        double sign, Rng& rng,
                        const std::vector<int>* label_override = nullptr) {
  const std::size_t n = indices.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  double loss_sum = 0.0;
  std::size_t batches = 0;
  std::vector<float> g;
  for (std::size_t start = 0; start < n; start += kMethodBatch) {
    const std::size_t end = std::min(n, start + kMethodBatch);
    std::vector<std::uint32_t> bi;
    std::vector<const float*> bt;
    for (std::size_t k = start; k < end; ++k) {
      bi.push_back(indices[order[k]]);
      if (targets) bt.push_back((*targets)[order[k]].data());
    }
    const auto batch = make_batch(ds, bi, label_override);
    double loss;
    if (targets)
      loss = kl_batch_gradient(model.arch, model.params, batch, bt, g);
    else
      loss = ce_batch_gradient(model.arch, model.params, batch, g);
    loss_sum += loss;
    ++batches;
    const float step = static_cast<float>(sign * kMethodLr);
    for (std::size_t j = 0; j < g.size(); ++j) model.params[j] -= step * g[j];
  }
  return batches ? loss_sum / static_cast<double>(batches) : 0.0;
}

}  // namespace ulbench::detail

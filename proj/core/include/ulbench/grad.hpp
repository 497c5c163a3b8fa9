#pragma once

// Batch-level gradient machinery on top of the per-sample engine in net.hpp.
// All reductions accumulate per fixed-size chunk in double and combine the
// chunk buffers in order, so results are deterministic regardless of thread
// scheduling.

#include <functional>
#include <vector>

#include "ulbench/data.hpp"
#include "ulbench/model.hpp"
#include "ulbench/net.hpp"

namespace ulbench {

template <typename T>
struct Batch {
  std::vector<const T*> inputs;
  std::vector<int> labels;
  std::size_t size() const { return inputs.size(); }
};

inline Batch<float> make_batch(const LabeledDataset& ds,
                               const std::vector<std::uint32_t>& indices,
                               const std::vector<int>* label_override = nullptr) {
  Batch<float> b;
  b.inputs.reserve(indices.size());
  b.labels.reserve(indices.size());
  for (auto i : indices) {
    b.inputs.push_back(ds.input(i));
    b.labels.push_back(label_override ? (*label_override)[i] : ds.label(i));
  }
  return b;
}

// Owns double-converted inputs for the double-precision path.
struct OwnedBatchD {
  std::vector<std::vector<double>> store;
  Batch<double> batch;
};

inline OwnedBatchD make_batch_d(const LabeledDataset& ds,
                                const std::vector<std::uint32_t>& indices) {
  OwnedBatchD ob;
  ob.store.reserve(indices.size());
  for (auto i : indices) {
    ob.store.emplace_back(ds.input(i), ds.input(i) + ds.shape().size());
    ob.batch.labels.push_back(ds.label(i));
  }
  for (auto& v : ob.store) ob.batch.inputs.push_back(v.data());
  return ob;
}

// Per-sample logit gradient hook: fills dlogits for sample k, returns loss.
template <typename T>
using LogitGradFn = std::function<double(std::size_t k, const T* logits, T* dlogits)>;

// Gradient of the (mean or summed) per-sample loss defined by logit_grad.
// Returns the corresponding loss value. logit_grad must be thread-safe.
template <typename T>
double batch_gradient(const Arch& arch, const std::vector<T>& params,
                      const Batch<T>& batch, const LogitGradFn<T>& logit_grad,
                      std::vector<T>& grad, bool mean = true) {
  const std::size_t np = arch.param_count();
  grad.assign(np, T(0));
  if (batch.size() == 0) return 0.0;
  std::vector<std::vector<double>> chunk_grad(kParallelChunks);
  std::vector<double> chunk_loss(kParallelChunks, 0.0);
  parallel_chunks(batch.size(), [&](int chunk, std::size_t b, std::size_t e) {
    auto& g = chunk_grad[chunk];
    g.assign(np, 0.0);
    Workspace<T> ws;
    std::vector<T> dl(arch.num_classes);
    std::vector<T> gs(np);
    for (std::size_t k = b; k < e; ++k) {
      net_forward(arch, params.data(), batch.inputs[k], ws);
      chunk_loss[chunk] +=
          logit_grad(k, ws.act.back().data(), dl.data());
      std::fill(gs.begin(), gs.end(), T(0));
      net_backward(arch, params.data(), ws, dl.data(), gs.data());
      for (std::size_t j = 0; j < np; ++j) g[j] += static_cast<double>(gs[j]);
    }
  });
  std::vector<double> total(np, 0.0);
  double loss = 0.0;
  for (int c = 0; c < kParallelChunks; ++c) {
    loss += chunk_loss[c];
    if (!chunk_grad[c].empty())
      for (std::size_t j = 0; j < np; ++j) total[j] += chunk_grad[c][j];
  }
  const double scale = mean ? 1.0 / static_cast<double>(batch.size()) : 1.0;
  for (std::size_t j = 0; j < np; ++j) grad[j] = static_cast<T>(total[j] * scale);
  return loss * scale;
}

// Cross-entropy batch gradient.
template <typename T>
double ce_batch_gradient(const Arch& arch, const std::vector<T>& params,
                         const Batch<T>& batch, std::vector<T>& grad,
                         bool mean = true) {
  LogitGradFn<T> fn = [&batch, &arch](std::size_t k, const T* logits, T* dl) {
    return ce_logit_grad(logits, arch.num_classes, batch.labels[k], dl);
  };
  return batch_gradient(arch, params, batch, fn, grad, mean);
}

// Single-sample CE gradient; grad is overwritten. Returns loss.
template <typename T>
double sample_ce_gradient(const Arch& arch, const std::vector<T>& params,
                          const T* input, int label, std::vector<T>& grad) {
  Workspace<T> ws;
  net_forward(arch, params.data(), input, ws);
  std::vector<T> dl(arch.num_classes);
  const double loss =
      ce_logit_grad(ws.act.back().data(), arch.num_classes, label, dl.data());
  grad.assign(arch.param_count(), T(0));
  net_backward(arch, params.data(), ws, dl.data(), grad.data());
  return loss;
}

// Gradient of the CE loss with respect to the input tensor. Returns loss.
template <typename T>
double input_ce_gradient(const Arch& arch, const std::vector<T>& params,
                         const T* input, int label, std::vector<T>& ginput) {
  Workspace<T> ws;
  net_forward(arch, params.data(), input, ws);
  std::vector<T> dl(arch.num_classes);
  const double loss =
      ce_logit_grad(ws.act.back().data(), arch.num_classes, label, dl.data());
  std::vector<T> gp(arch.param_count(), T(0));
  ginput.assign(arch.input.size(), T(0));
  net_backward(arch, params.data(), ws, dl.data(), gp.data(), ginput.data());
  return loss;
}

// Exact Hessian-vector product of the mean CE loss over the batch, via the
// forward-over-reverse tangent passes in net.hpp.
template <typename T>
void ce_hvp(const Arch& arch, const std::vector<T>& params, const Batch<T>& batch,
            const std::vector<T>& v, std::vector<T>& out, bool mean = true) {
  const std::size_t np = arch.param_count();
  out.assign(np, T(0));
  if (batch.size() == 0) return;
  std::vector<std::vector<double>> chunk_out(kParallelChunks);
  parallel_chunks(batch.size(), [&](int chunk, std::size_t b, std::size_t e) {
    auto& acc = chunk_out[chunk];
    acc.assign(np, 0.0);
    Workspace<T> ws;
    const int C = arch.num_classes;
    std::vector<T> dl(C), dld(C), p(C), gt(np);
    for (std::size_t k = b; k < e; ++k) {
      net_forward(arch, params.data(), batch.inputs[k], ws);
      net_jvp(arch, params.data(), v.data(), ws);
      const T* logits = ws.act.back().data();
      const T* zdot = ws.tan.back().data();
      softmax(logits, C, p.data());
      // adjoint = p - onehot(y); adjoint tangent = p.zdot - p (p . zdot)
      T pdot_sum = 0;
      for (int c = 0; c < C; ++c) pdot_sum += p[c] * zdot[c];
      for (int c = 0; c < C; ++c) {
        dl[c] = p[c];
        dld[c] = p[c] * zdot[c] - p[c] * pdot_sum;
      }
      dl[batch.labels[k]] -= T(1);
      std::fill(gt.begin(), gt.end(), T(0));
      net_backward_tangent(arch, params.data(), v.data(), ws, dl.data(),
                           dld.data(), gt.data());
      for (std::size_t j = 0; j < np; ++j) acc[j] += static_cast<double>(gt[j]);
    }
  });
  std::vector<double> total(np, 0.0);
  for (int c = 0; c < kParallelChunks; ++c)
    if (!chunk_out[c].empty())
      for (std::size_t j = 0; j < np; ++j) total[j] += chunk_out[c][j];
  const double scale = mean ? 1.0 / static_cast<double>(batch.size()) : 1.0;
  for (std::size_t j = 0; j < np; ++j) out[j] = static_cast<T>(total[j] * scale);
}

// Mean CE loss without gradients.
template <typename T>
double ce_batch_loss(const Arch& arch, const std::vector<T>& params,
                     const Batch<T>& batch) {
  if (batch.size() == 0) return 0.0;
  std::vector<double> chunk_loss(kParallelChunks, 0.0);
  parallel_chunks(batch.size(), [&](int chunk, std::size_t b, std::size_t e) {
    Workspace<T> ws;
    std::vector<T> dl(arch.num_classes);
    for (std::size_t k = b; k < e; ++k) {
      net_forward(arch, params.data(), batch.inputs[k], ws);
      chunk_loss[chunk] += ce_logit_grad(ws.act.back().data(), arch.num_classes,
                                         batch.labels[k], dl.data());
    }
  });
  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  return loss / static_cast<double>(batch.size());
}

}  // namespace ulbench

#include "ulbench/model.hpp"

#include <atomic>
#include <cmath>

#include "ulbench/net.hpp"

namespace ulbench {

std::vector<float> init_params(const Arch& arch, std::uint64_t seed) {
  arch.validate();
  std::vector<float> params(arch.param_count(), 0.0f);
  const auto offs = arch.param_offsets();
  Rng rng(sub_seed(seed, "init"));
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    if (l.kind == LayerKind::kConv) {
      const int fan_in = l.in_c * l.kernel * l.kernel;
      const double std = std::sqrt(2.0 / fan_in);
      const std::size_t nw = l.param_count() - l.out_c;
      for (std::size_t j = 0; j < nw; ++j)
        params[offs[i] + j] = static_cast<float>(std * rng.normal());
    } else if (l.kind == LayerKind::kDense) {
      const double std = std::sqrt(2.0 / l.in_dim);
      const std::size_t nw = l.param_count() - l.out_dim;
      for (std::size_t j = 0; j < nw; ++j)
        params[offs[i] + j] = static_cast<float>(std * rng.normal());
    }
  }
  return params;
}

void check_input_compat(const ModelState& model, const LabeledDataset& ds) {
  if (ds.shape().size() != model.arch.input.size())
    throw Error("model/dataset input shape mismatch");
  if (ds.num_classes() != model.arch.num_classes)
    throw Error("model/dataset class count mismatch");
}

void forward_logits(const ModelState& model, const float* input, float* out) {
  Workspace<float> ws;
  net_forward(model.arch, model.params.data(), input, ws);
  std::copy(ws.act.back().begin(), ws.act.back().end(), out);
}

std::vector<float> predict_proba(const ModelState& model, const float* input) {
  std::vector<float> logits(model.arch.num_classes);
  forward_logits(model, input, logits.data());
  std::vector<float> p(logits.size());
  softmax(logits.data(), logits.size(), p.data());
  return p;
}

int argmax_lowest(const float* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int predict_class(const ModelState& model, const float* input) {
  std::vector<float> logits(model.arch.num_classes);
  forward_logits(model, input, logits.data());
  return argmax_lowest(logits.data(), model.arch.num_classes);
}

double evaluate(const ModelState& model, const LabeledDataset& ds,
                const std::vector<std::uint32_t>& indices) {
  if (indices.empty()) throw Error("evaluate: empty dataset");
  check_input_compat(model, ds);
  std::vector<std::size_t> correct(kParallelChunks, 0);
  parallel_chunks(indices.size(), [&](int chunk, std::size_t b, std::size_t e) {
    Workspace<float> ws;
    std::size_t n = 0;
    for (std::size_t k = b; k < e; ++k) {
      const auto i = indices[k];
      net_forward(model.arch, model.params.data(), ds.input(i), ws);
      if (argmax_lowest(ws.act.back().data(), model.arch.num_classes) ==
          ds.label(i))
        ++n;
    }
    correct[chunk] = n;
  });
  std::size_t total = 0;
  for (auto c : correct) total += c;
  return 100.0 * static_cast<double>(total) / static_cast<double>(indices.size());
}

double evaluate(const ModelState& model, const LabeledDataset& ds) {
  return evaluate(model, ds, ds.all_indices());
}

std::vector<double> per_sample_loss(const ModelState& model,
                                    const LabeledDataset& ds,
                                    const std::vector<std::uint32_t>& indices) {
  if (indices.empty()) throw Error("per_sample_loss: empty dataset");
  check_input_compat(model, ds);
  std::vector<double> losses(indices.size());
  parallel_chunks(indices.size(), [&](int, std::size_t b, std::size_t e) {
    Workspace<float> ws;
    std::vector<float> dl(model.arch.num_classes);
    for (std::size_t k = b; k < e; ++k) {
      const auto i = indices[k];
      net_forward(model.arch, model.params.data(), ds.input(i), ws);
      losses[k] = ce_logit_grad(ws.act.back().data(), ws.act.back().size(),
                                ds.label(i), dl.data());
    }
  });
  return losses;
}

std::vector<double> per_sample_loss(const ModelState& model,
                                    const LabeledDataset& ds) {
  return per_sample_loss(model, ds, ds.all_indices());
}

}  // namespace ulbench

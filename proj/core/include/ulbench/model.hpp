#pragma once

#include <cstdint>
#include <vector>

#include "ulbench/arch.hpp"
#include "ulbench/data.hpp"

namespace ulbench {

// Architecture descriptor plus the flat parameter vector; the unit every
// unlearning method transforms. Immutable by convention after training.
struct ModelState {
  Arch arch;
  std::vector<float> params;
  std::uint64_t seed = 0;
  std::uint64_t trained_on = 0;  // dataset fingerprint
  int epochs = 0;
};

// Kaiming-normal initialization, deterministic in the seed.
std::vector<float> init_params(const Arch& arch, std::uint64_t seed);

void check_input_compat(const ModelState& model, const LabeledDataset& ds);

// Logits for one input; out must have arch.num_classes entries.
void forward_logits(const ModelState& model, const float* input, float* out);

// Softmax probabilities; entries are >= 0 and sum to 1 within 1e-6.
std::vector<float> predict_proba(const ModelState& model, const float* input);

// Argmax with ties broken by the lowest class index.
int predict_class(const ModelState& model, const float* input);
int argmax_lowest(const float* v, int n);

// 100 * fraction of argmax-correct predictions. Empty input set is rejected.
double evaluate(const ModelState& model, const LabeledDataset& ds);
double evaluate(const ModelState& model, const LabeledDataset& ds,
                const std::vector<std::uint32_t>& indices);

// Cross-entropy loss per sample, order-aligned with dataset indices.
std::vector<double> per_sample_loss(const ModelState& model,
                                    const LabeledDataset& ds);
std::vector<double> per_sample_loss(const ModelState& model,
                                    const LabeledDataset& ds,
                                    const std::vector<std::uint32_t>& indices);

}  // namespace ulbench

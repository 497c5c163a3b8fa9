#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ulbench/data.hpp"
#include "ulbench/model.hpp"

namespace ulbench {

enum class MiaFeatureKind {
  kCorrectness,
  kConfidence,
  kEntropy,
  kMEntropy,
  kProbVector,
};

std::string to_string(MiaFeatureKind k);
MiaFeatureKind mia_kind_from_string(const std::string& s);
inline constexpr MiaFeatureKind kAllMiaKinds[] = {
    MiaFeatureKind::kCorrectness, MiaFeatureKind::kConfidence,
    MiaFeatureKind::kEntropy, MiaFeatureKind::kMEntropy,
    MiaFeatureKind::kProbVector};

// Scalar feature formulas, exposed for the oracle tests. Probabilities are
// clamped to [1e-12, 1 - 1e-12] inside the log terms.
double output_entropy(const std::vector<float>& probs);
double modified_entropy(const std::vector<float>& probs, int label);

// Probability oracle: input tensor -> class probabilities. Lets the MIA
// machinery score anything that predicts (single models, SISA ensembles).
// Must be safe to call from multiple threads.
using ProbaFn = std::function<std::vector<float>(const float*)>;

// Membership features for the given samples; row k corresponds to
// indices[k]. Dimensionality 1 except kProbVector (num_classes).
std::vector<std::vector<double>> mia_features(const ProbaFn& proba, int num_classes,
                                              const LabeledDataset& ds,
                                              const std::vector<std::uint32_t>& indices,
                                              MiaFeatureKind kind);
std::vector<std::vector<double>> mia_features(const ModelState& model,
                                              const LabeledDataset& ds,
                                              const std::vector<std::uint32_t>& indices,
                                              MiaFeatureKind kind);

// Regularized logistic regression over standardized features (member = 1).
struct MiaPredictor {
  MiaFeatureKind kind = MiaFeatureKind::kCorrectness;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  std::size_t n_per_side = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;  // zero-variance features; constant output

  bool predict_member(const std::vector<double>& feature) const;
};

MiaPredictor train_mia_predictor(const ProbaFn& proba, int num_classes,
                                 const LabeledDataset& train_ds,
                                 const std::vector<std::uint32_t>& retain_indices,
                                 const LabeledDataset& test_ds,
                                 MiaFeatureKind kind, std::size_t n_per_side,
                                 std::uint64_t seed);
MiaPredictor train_mia_predictor(const ModelState& model,
                                 const LabeledDataset& train_ds,
                                 const std::vector<std::uint32_t>& retain_indices,
                                 const LabeledDataset& test_ds,
                                 MiaFeatureKind kind, std::size_t n_per_side,
                                 std::uint64_t seed);

// 100 * TN / |D_f|: fraction of forget samples the predictor calls unseen.
double mia_efficacy(const MiaPredictor& predictor, const ProbaFn& proba,
                    int num_classes, const LabeledDataset& ds,
                    const std::vector<std::uint32_t>& forget_indices);
double mia_efficacy(const MiaPredictor& predictor, const ModelState& model,
                    const LabeledDataset& ds,
                    const std::vector<std::uint32_t>& forget_indices);

// (TA, RA).
std::pair<double, double> utility_metrics(const ModelState& model,
                                          const LabeledDataset& train_ds,
                                          const std::vector<std::uint32_t>& retain_indices,
                                          const LabeledDataset& test_ds);

// (FA_raw, FA_disc): accuracy on the forget set and its signed difference
// from the retrained reference model.
std::pair<double, double> forgetting_accuracy(
    const ModelState& model, const LabeledDataset& ds,
    const std::vector<std::uint32_t>& forget_indices,
    const ModelState& retrain_reference);

// ||a - b||_2 / ||ref||_2.
double l2_distance(const std::vector<float>& a, const std::vector<float>& b,
                   const std::vector<float>& ref);

// (rte_ratio, storage_bytes).
std::pair<double, std::uint64_t> cost_metrics(double method_wall_seconds,
                                              std::uint64_t method_storage_bytes,
                                              double retrain_wall_seconds);

}  // namespace ulbench

#include "ulbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "ulbench/net.hpp"

namespace ulbench {

namespace {
constexpr double kProbFloor = 1e-12;

double clamped(double p) {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}
}  // namespace

std::string to_string(MiaFeatureKind k) {
  switch (k) {
    case MiaFeatureKind::kCorrectness: return "correctness";
    case MiaFeatureKind::kConfidence: return "confidence";
    case MiaFeatureKind::kEntropy: return "entropy";
    case MiaFeatureKind::kMEntropy: return "m_entropy";
    case MiaFeatureKind::kProbVector: return "prob_vector";
  }
  return "correctness";
}

MiaFeatureKind mia_kind_from_string(const std::string& s) {
  for (auto k : kAllMiaKinds)
    if (to_string(k) == s) return k;
  throw Error("unknown MIA feature kind '" + s + "'");
}

double output_entropy(const std::vector<float>& probs) {
  double h = 0.0;
  for (float p : probs) h -= static_cast<double>(p) * std::log(clamped(p));
  return h;
}

double modified_entropy(const std::vector<float>& probs, int label) {
  const double py = probs[label];
  double h = -(1.0 - py) * std::log(clamped(py));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (static_cast<int>(i) == label) continue;
    h -= static_cast<double>(probs[i]) * std::log(clamped(1.0 - probs[i]));
  }
  return h;
}

std::vector<std::vector<double>> mia_features(
    const ProbaFn& proba, int num_classes, const LabeledDataset& ds,
    const std::vector<std::uint32_t>& indices, MiaFeatureKind kind) {
  const int C = num_classes;
  std::vector<std::vector<double>> out(indices.size());
  parallel_chunks(indices.size(), [&](int, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto i = indices[k];
      const std::vector<float> p = proba(ds.input(i));
      if (static_cast<int>(p.size()) != C)
        throw Error("mia_features: probability vector length mismatch");
      const int y = ds.label(i);
      switch (kind) {
        case MiaFeatureKind::kCorrectness:
          out[k] = {argmax_lowest(p.data(), C) == y ? 1.0 : 0.0};
          break;
        case MiaFeatureKind::kConfidence:
          out[k] = {static_cast<double>(p[y])};
          break;
        case MiaFeatureKind::kEntropy:
          out[k] = {output_entropy(p)};
          break;
        case MiaFeatureKind::kMEntropy:
          out[k] = {modified_entropy(p, y)};
          break;
        case MiaFeatureKind::kProbVector:
          out[k].assign(p.begin(), p.end());
          break;
      }
    }
  });
  return out;
}

namespace {
ProbaFn model_proba(const ModelState& model) {
  return [&model](const float* input) { return predict_proba(model, input); };
}
}  // namespace

std::vector<std::vector<double>> mia_features(
    const ModelState& model, const LabeledDataset& ds,
    const std::vector<std::uint32_t>& indices, MiaFeatureKind kind) {
  check_input_compat(model, ds);
  return mia_features(model_proba(model), model.arch.num_classes, ds, indices,
                      kind);
}

bool MiaPredictor::predict_member(const std::vector<double>& feature) const {
  double z = bias;
  for (std::size_t d = 0; d < weights.size(); ++d) {
    const double s = feature_std[d] > 0 ? feature_std[d] : 1.0;
    z += weights[d] * ((feature[d] - feature_mean[d]) / s);
  }
  return z >= 0.0;  // sigmoid(z) >= 0.5
}

MiaPredictor train_mia_predictor(const ProbaFn& proba, int num_classes,
                                 const LabeledDataset& train_ds,
                                 const std::vector<std::uint32_t>& retain_indices,
                                 const LabeledDataset& test_ds,
                                 MiaFeatureKind kind, std::size_t n_per_side,
                                 std::uint64_t seed) {
  if (n_per_side == 0) throw Error("mia: n_per_side must be positive");
  if (n_per_side > retain_indices.size() || n_per_side > test_ds.size())
    throw Error("mia: n_per_side exceeds available retain/test samples");

  Rng rng(sub_seed(seed, "mia_sample"));
  auto pick_r = rng.sample_without_replacement(retain_indices.size(), n_per_side);
  auto pick_t = rng.sample_without_replacement(test_ds.size(), n_per_side);
  std::vector<std::uint32_t> member_idx;
  for (auto p : pick_r) member_idx.push_back(retain_indices[p]);

  const auto member_feat =
      mia_features(proba, num_classes, train_ds, member_idx, kind);
  const auto non_feat = mia_features(proba, num_classes, test_ds, pick_t, kind);

  const std::size_t dim = member_feat.empty() ? 1 : member_feat[0].size();
  const std::size_t n = 2 * n_per_side;
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  x.reserve(n);
  for (const auto& f : member_feat) { x.push_back(f); y.push_back(1); }
  for (const auto& f : non_feat) { x.push_back(f); y.push_back(0); }

  MiaPredictor pred;
  pred.kind = kind;
  pred.n_per_side = n_per_side;
  pred.seed = seed;
  pred.feature_mean.assign(dim, 0.0);
  pred.feature_std.assign(dim, 0.0);
  for (const auto& f : x)
    for (std::size_t d = 0; d < dim; ++d) pred.feature_mean[d] += f[d];
  for (std::size_t d = 0; d < dim; ++d) pred.feature_mean[d] /= n;
  for (const auto& f : x)
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = f[d] - pred.feature_mean[d];
      pred.feature_std[d] += c * c;
    }
  bool any_variance = false;
  for (std::size_t d = 0; d < dim; ++d) {
    pred.feature_std[d] = std::sqrt(pred.feature_std[d] / n);
    if (pred.feature_std[d] > 0) any_variance = true;
  }
  pred.weights.assign(dim, 0.0);
  pred.bias = 0.0;
  if (!any_variance) {
    pred.degenerate = true;
    std::cerr << "warning: MIA feature '" << to_string(kind)
              << "' has zero variance; predictor is constant\n";
    return pred;
  }

  // Standardize.
  std::vector<std::vector<double>> z = x;
  for (auto& f : z)
    for (std::size_t d = 0; d < dim; ++d) {
      const double s = pred.feature_std[d] > 0 ? pred.feature_std[d] : 1.0;
      f[d] = (f[d] - pred.feature_mean[d]) / s;
    }

  // Full-batch gradient descent on L2-regularized logistic loss, run to a
  // 1e-6 gradient-norm tolerance.
  const double lambda = 1e-3;
  const double lr = 0.5;
  const int max_iters = 20000;
  std::vector<double> gw(dim);
  for (int it = 0; it < max_iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double s = pred.bias;
      for (std::size_t d = 0; d < dim; ++d) s += pred.weights[d] * z[k][d];
      const double p = 1.0 / (1.0 + std::exp(-s));
      const double err = p - y[k];
      for (std::size_t d = 0; d < dim; ++d) gw[d] += err * z[k][d];
      gb += err;
    }
    double norm2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      gw[d] = gw[d] / n + lambda * pred.weights[d];
      norm2 += gw[d] * gw[d];
    }
    gb /= n;
    norm2 += gb * gb;
    if (std::sqrt(norm2) < 1e-6) break;
    for (std::size_t d = 0; d < dim; ++d) pred.weights[d] -= lr * gw[d];
    pred.bias -= lr * gb;
  }
  return pred;
}

MiaPredictor train_mia_predictor(const ModelState& model,
                                 const LabeledDataset& train_ds,
                                 const std::vector<std::uint32_t>& retain_indices,
                                 const LabeledDataset& test_ds,
                                 MiaFeatureKind kind, std::size_t n_per_side,
                                 std::uint64_t seed) {
  check_input_compat(model, train_ds);
  return train_mia_predictor(model_proba(model), model.arch.num_classes,
                             train_ds, retain_indices, test_ds, kind, n_per_side,
                             seed);
}

double mia_efficacy(const MiaPredictor& predictor, const ProbaFn& proba,
                    int num_classes, const LabeledDataset& ds,
                    const std::vector<std::uint32_t>& forget_indices) {
  if (forget_indices.empty()) throw Error("mia_efficacy: empty forget set");
  const auto feats =
      mia_features(proba, num_classes, ds, forget_indices, predictor.kind);
  std::size_t tn = 0;
  for (const auto& f : feats)
    if (!predictor.predict_member(f)) ++tn;
  return 100.0 * static_cast<double>(tn) /
         static_cast<double>(forget_indices.size());
}

double mia_efficacy(const MiaPredictor& predictor, const ModelState& model,
                    const LabeledDataset& ds,
                    const std::vector<std::uint32_t>& forget_indices) {
  return mia_efficacy(predictor, model_proba(model), model.arch.num_classes, ds,
                      forget_indices);
}

std::pair<double, double> utility_metrics(
    const ModelState& model, const LabeledDataset& train_ds,
    const std::vector<std::uint32_t>& retain_indices,
    const LabeledDataset& test_ds) {
  const double ta = evaluate(model, test_ds);
  const double ra = evaluate(model, train_ds, retain_indices);
  return {ta, ra};
}

std::pair<double, double> forgetting_accuracy(
    const ModelState& model, const LabeledDataset& ds,
    const std::vector<std::uint32_t>& forget_indices,
    const ModelState& retrain_reference) {
  const double fa_raw = evaluate(model, ds, forget_indices);
  const double fa_ref = evaluate(retrain_reference, ds, forget_indices);
  return {fa_raw, fa_raw - fa_ref};
}

double l2_distance(const std::vector<float>& a, const std::vector<float>& b,
                   const std::vector<float>& ref) {
  if (a.size() != b.size() || a.size() != ref.size())
    throw Error("l2_distance: parameter length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    num += d * d;
    den += static_cast<double>(ref[i]) * static_cast<double>(ref[i]);
  }
  if (den == 0.0) throw Error("l2_distance: reference norm is zero");
  return std::sqrt(num) / std::sqrt(den);
}

std::pair<double, std::uint64_t> cost_metrics(double method_wall_seconds,
                                              std::uint64_t method_storage_bytes,
                                              double retrain_wall_seconds) {
  if (retrain_wall_seconds <= 0.0)
    throw Error("cost_metrics: retrain time must be positive");
  return {method_wall_seconds / retrain_wall_seconds, method_storage_bytes};
}

}  // namespace ulbench

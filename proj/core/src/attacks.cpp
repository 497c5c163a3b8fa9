#include "ulbench/attacks.hpp"

#include <algorithm>

namespace ulbench {

std::string to_string(PoisonKind k) {
  return k == PoisonKind::kLabelFlip ? "label_flip" : "backdoor";
}

std::string to_string(Corner c) {
  switch (c) {
    case Corner::kTopLeft: return "top_left";
    case Corner::kTopRight: return "top_right";
    case Corner::kBottomLeft: return "bottom_left";
    case Corner::kBottomRight: return "bottom_right";
  }
  return "bottom_right";
}

PoisonKind poison_kind_from_string(const std::string& s) {
  if (s == "label_flip") return PoisonKind::kLabelFlip;
  if (s == "backdoor") return PoisonKind::kBackdoor;
  throw Error("unknown poison kind '" + s + "'");
}

Corner corner_from_string(const std::string& s) {
  if (s == "top_left") return Corner::kTopLeft;
  if (s == "top_right") return Corner::kTopRight;
  if (s == "bottom_left") return Corner::kBottomLeft;
  if (s == "bottom_right") return Corner::kBottomRight;
  throw Error("unknown corner '" + s + "'");
}

std::vector<std::pair<int, int>> mirror_flip_pairs(int num_classes) {
  if (num_classes % 2 != 0)
    throw Error("mirror_flip_pairs: class count must be even");
  std::vector<std::pair<int, int>> pairs;
  for (int c = 0; c < num_classes / 2; ++c)
    pairs.emplace_back(c, num_classes - 1 - c);
  return pairs;
}

void PoisonSpec::validate(const LabeledDataset& ds) const {
  if (budget > ds.size()) throw Error("poison: budget exceeds dataset size");
  if (kind == PoisonKind::kLabelFlip) {
    std::vector<int> partner(ds.num_classes(), -1);
    for (const auto& [a, b] : flip_pairs) {
      if (a < 0 || b < 0 || a >= ds.num_classes() || b >= ds.num_classes())
        throw Error("poison: flip pair class out of range");
      if (a == b || partner[a] != -1 || partner[b] != -1)
        throw Error("poison: flip pairs must form a perfect matching");
      partner[a] = b;
      partner[b] = a;
    }
    for (int c = 0; c < ds.num_classes(); ++c)
      if (partner[c] == -1)
        throw Error("poison: class " + std::to_string(c) + " has no flip partner");
  } else {
    if (trigger_size < 1) throw Error("poison: trigger_size must be >= 1");
    if (trigger_size > ds.shape().h || trigger_size > ds.shape().w)
      throw Error("poison: trigger larger than image");
    if (target_class < 0 || target_class >= ds.num_classes())
      throw Error("poison: target class out of range");
  }
}

std::pair<LabeledDataset, std::vector<std::uint32_t>> apply_label_flip(
    const LabeledDataset& ds, const PoisonSpec& spec) {
  spec.validate(ds);
  if (spec.budget == 0) return {ds, {}};
  std::vector<int> partner(ds.num_classes());
  for (const auto& [a, b] : spec.flip_pairs) {
    partner[a] = b;
    partner[b] = a;
  }
  // Stratified: budget / C per class, remainder spread over the lowest
  // class ids so any budget is usable.
  const int C = ds.num_classes();
  const std::size_t base = spec.budget / C;
  const std::size_t rem = spec.budget % C;
  std::vector<std::uint32_t> selected;
  Rng rng(sub_seed(spec.seed, "label_flip"));
  for (int c = 0; c < C; ++c) {
    const auto cls = ds.indices_of_class(c);
    const std::size_t want = base + (static_cast<std::size_t>(c) < rem ? 1 : 0);
    if (want > cls.size())
      throw Error("poison: class " + std::to_string(c) +
                  " smaller than its per-class flip budget");
    const auto pick = rng.sample_without_replacement(cls.size(), want);
    for (auto p : pick) selected.push_back(cls[p]);
  }
  std::sort(selected.begin(), selected.end());
  std::vector<int> new_labels;
  new_labels.reserve(selected.size());
  for (auto i : selected) new_labels.push_back(partner[ds.label(i)]);
  auto poisoned = ds.with_modifications(selected, nullptr, &new_labels,
                                        ds.name() + "+label_flip");
  return {std::move(poisoned), std::move(selected)};
}

void stamp_trigger(const Shape3& shape, float* input, const PoisonSpec& spec) {
  const int t = spec.trigger_size;
  int y0 = 0, x0 = 0;
  switch (spec.trigger_location) {
    case Corner::kTopLeft: break;
    case Corner::kTopRight: x0 = shape.w - t; break;
    case Corner::kBottomLeft: y0 = shape.h - t; break;
    case Corner::kBottomRight: y0 = shape.h - t; x0 = shape.w - t; break;
  }
  for (int c = 0; c < shape.c; ++c)
    for (int y = y0; y < y0 + t; ++y)
      for (int x = x0; x < x0 + t; ++x)
        input[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x] =
            spec.trigger_value;
}

std::pair<LabeledDataset, std::vector<std::uint32_t>> apply_backdoor(
    const LabeledDataset& ds, const PoisonSpec& spec) {
  spec.validate(ds);
  if (spec.budget == 0) return {ds, {}};
  Rng rng(sub_seed(spec.seed, "backdoor"));
  auto selected = rng.sample_without_replacement(ds.size(), spec.budget);
  std::vector<std::vector<float>> new_inputs;
  new_inputs.reserve(selected.size());
  std::vector<int> new_labels(selected.size(), spec.target_class);
  for (auto i : selected) {
    std::vector<float> x(ds.input(i), ds.input(i) + ds.shape().size());
    stamp_trigger(ds.shape(), x.data(), spec);
    new_inputs.push_back(std::move(x));
  }
  auto poisoned = ds.with_modifications(selected, &new_inputs, &new_labels,
                                        ds.name() + "+backdoor");
  return {std::move(poisoned), std::move(selected)};
}

double attack_success_rate(const ModelState& model,
                           const LabeledDataset& clean_test,
                           const PoisonSpec& spec, bool exclusive) {
  if (spec.kind != PoisonKind::kBackdoor)
    throw Error("attack_success_rate: defined for backdoor specs only "
                "(label-flip efficacy is read from victim-class accuracy)");
  spec.validate(clean_test);
  check_input_compat(model, clean_test);
  std::size_t hits = 0, total = 0;
  std::vector<float> x(clean_test.shape().size());
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    if (exclusive && clean_test.label(i) == spec.target_class) continue;
    std::copy(clean_test.input(i), clean_test.input(i) + x.size(), x.begin());
    stamp_trigger(clean_test.shape(), x.data(), spec);
    if (predict_class(model, x.data()) == spec.target_class) ++hits;
    ++total;
  }
  if (total == 0) throw Error("attack_success_rate: no eligible test samples");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace ulbench

#include "ulbench/train.hpp"

#include <cmath>
#include <cstring>

#include "ulbench/grad.hpp"

namespace ulbench {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("train config: epochs must be >= 1");
  if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
  if (lr <= 0) throw Error("train config: lr must be positive");
  if (momentum < 0 || momentum >= 1)
    throw Error("train config: momentum must be in [0, 1)");
  if (weight_decay < 0) throw Error("train config: weight_decay must be >= 0");
}

namespace {

// Zero-pad by 4 and crop back at a random offset, then flip with p = 1/2.
void augment_sample(const Shape3& s, const float* in, float* out, Rng& rng) {
  const int pad = 4;
  const int oy = static_cast<int>(rng.uniform_index(2 * pad + 1)) - pad;
  const int ox = static_cast<int>(rng.uniform_index(2 * pad + 1)) - pad;
  const bool flip = rng.uniform_index(2) == 1;
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        const int sy = y + oy;
        const int sx = (flip ? s.w - 1 - x : x) + ox;
        float v = 0.0f;
        if (sy >= 0 && sy < s.h && sx >= 0 && sx < s.w)
          v = in[(static_cast<std::size_t>(c) * s.h + sy) * s.w + sx];
        out[(static_cast<std::size_t>(c) * s.h + y) * s.w + x] = v;
      }
    }
  }
}

}  // namespace

ModelState train(const LabeledDataset& dataset, const Arch& arch,
                 const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  arch.validate();
  if (dataset.shape().size() != arch.input.size())
    throw Error("train: dataset/arch input shape mismatch");

  // Each epoch shuffles a fresh copy of the canonical order, so the rng
  // state alone pins down the permutation and resuming from a checkpoint
  // replays the interrupted trajectory exactly.
  const std::vector<std::uint32_t> base_order =
      options.indices ? *options.indices : dataset.all_indices();
  if (base_order.empty()) throw Error("train: empty dataset");
  std::vector<std::uint32_t> order;

  std::vector<float> params;
  std::vector<float> velocity;
  int start_epoch = 0;
  Rng shuffle_rng(sub_seed(config.seed, "shuffle"));
  Rng aug_rng(sub_seed(config.seed, "aug"));

  if (options.resume) {
    const Checkpoint& ck = *options.resume;
    if (!(ck.model.arch == arch)) throw Error("train: resume arch mismatch");
    params = ck.model.params;
    velocity = ck.optimizer_state;
    start_epoch = ck.epoch;
    const auto nl = ck.rng_state.find('\n');
    if (nl == std::string::npos) throw Error("train: malformed rng state");
    shuffle_rng.deserialize(ck.rng_state.substr(0, nl));
    aug_rng.deserialize(ck.rng_state.substr(nl + 1));
  } else if (options.init) {
    if (!(options.init->arch == arch)) throw Error("train: init arch mismatch");
    params = options.init->params;
  } else {
    params = init_params(arch, config.seed);
  }
  if (velocity.empty()) velocity.assign(params.size(), 0.0f);

  const Shape3 in_shape = arch.input;
  const bool augment = config.augmentation && in_shape.h > 8 && in_shape.w > 8;
  const std::size_t n = base_order.size();
  const std::size_t num_batches = (n + config.batch_size - 1) / config.batch_size;

  std::vector<float> grad;
  std::vector<std::vector<float>> aug_store;
  std::vector<float> before;
  std::vector<float> delta;
  int step = static_cast<int>(start_epoch * num_batches);

  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const double lr_e =
        config.schedule == LrSchedule::kCosine
            ? config.lr * 0.5 * (1.0 + std::cos(M_PI * epoch / config.epochs))
            : config.lr;
    order = base_order;
    shuffle_rng.shuffle(order);
    for (std::size_t bi = 0; bi < num_batches; ++bi) {
      const std::size_t b = bi * config.batch_size;
      const std::size_t e = std::min(n, b + config.batch_size);
      std::vector<std::uint32_t> batch_idx(order.begin() + b, order.begin() + e);

      Batch<float> batch;
      batch.inputs.reserve(batch_idx.size());
      batch.labels.reserve(batch_idx.size());
      if (augment) {
        aug_store.resize(batch_idx.size());
        for (std::size_t k = 0; k < batch_idx.size(); ++k) {
          aug_store[k].resize(in_shape.size());
          augment_sample(in_shape, dataset.input(batch_idx[k]),
                         aug_store[k].data(), aug_rng);
          batch.inputs.push_back(aug_store[k].data());
        }
      } else {
        for (auto i : batch_idx) batch.inputs.push_back(dataset.input(i));
      }
      for (auto i : batch_idx)
        batch.labels.push_back(options.label_override
                                   ? (*options.label_override)[i]
                                   : dataset.label(i));

      const double loss = ce_batch_gradient(arch, params, batch, grad);
      if (!std::isfinite(loss))
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                    " step " + std::to_string(step));

      const bool record = static_cast<bool>(options.hooks.on_batch_update);
      if (record) before = params;

      for (std::size_t j = 0; j < params.size(); ++j) {
        if (options.update_mask && !(*options.update_mask)[j]) continue;
        float g = grad[j] +
                  static_cast<float>(config.weight_decay) * params[j];
        if (options.l1_penalty != 0.0 && params[j] != 0.0f)
          g += static_cast<float>(options.l1_penalty) *
               (params[j] > 0.0f ? 1.0f : -1.0f);
        velocity[j] = static_cast<float>(config.momentum) * velocity[j] + g;
        const float upd = config.nesterov
                              ? g + static_cast<float>(config.momentum) * velocity[j]
                              : velocity[j];
        params[j] -= static_cast<float>(lr_e) * upd;
      }

      if (record) {
        delta.resize(params.size());
        for (std::size_t j = 0; j < params.size(); ++j)
          delta[j] = params[j] - before[j];
        options.hooks.on_batch_update(step, batch_idx, delta);
      }
      ++step;
    }
    if (options.hooks.on_epoch_end) {
      Checkpoint ck;
      ck.model = ModelState{arch, params, config.seed, dataset.fingerprint(),
                            epoch + 1};
      ck.optimizer_state = velocity;
      ck.epoch = epoch + 1;
      ck.rng_state = shuffle_rng.serialize() + "\n" + aug_rng.serialize();
      options.hooks.on_epoch_end(ck);
    }
  }
  return ModelState{arch, std::move(params), config.seed, dataset.fingerprint(),
                    config.epochs};
}

ModelState fine_tune(const ModelState& model, const LabeledDataset& dataset,
                     const std::vector<std::uint32_t>& indices, int epochs,
                     double lr, std::uint64_t seed, const TrainOptions& extra) {
  if (epochs == 0) return model;
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 32;
  cfg.lr = lr;
  cfg.momentum = 0.9;
  cfg.nesterov = true;
  cfg.schedule = LrSchedule::kConstant;
  cfg.weight_decay = 0.0;
  cfg.augmentation = false;
  cfg.seed = seed;
  TrainOptions opts = extra;
  opts.indices = &indices;
  opts.init = &model;
  opts.resume = nullptr;
  ModelState out = train(dataset, model.arch, cfg, opts);
  out.seed = model.seed;
  out.trained_on = model.trained_on;
  out.epochs = model.epochs;
  return out;
}

}  // namespace ulbench

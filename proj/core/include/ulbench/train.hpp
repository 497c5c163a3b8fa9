#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "ulbench/data.hpp"
#include "ulbench/model.hpp"

namespace ulbench {

enum class LrSchedule { kCosine, kConstant };

struct TrainConfig {
  int epochs = 30;
  int batch_size = 128;
  double lr = 0.1;
  double momentum = 0.9;
  bool nesterov = true;
  LrSchedule schedule = LrSchedule::kCosine;
  double weight_decay = 5e-4;
  bool augmentation = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Checkpoint {
  ModelState model;
  std::vector<float> optimizer_state;  // momentum buffer
  int epoch = 0;                       // completed epochs
  std::string rng_state;               // serialized shuffle/augmentation engines
};

struct TrainHooks {
  std::function<void(const Checkpoint&)> on_epoch_end;
  // Called after every SGD step with the batch's sample indices (dataset
  // space) and the parameter delta it applied.
  std::function<void(int step, const std::vector<std::uint32_t>& batch,
                     const std::vector<float>& delta)>
      on_batch_update;
};

struct TrainOptions {
  const std::vector<std::uint32_t>* indices = nullptr;      // default: all
  const std::vector<int>* label_override = nullptr;         // dataset-aligned
  const std::vector<std::uint8_t>* update_mask = nullptr;   // 0 = frozen param
  const ModelState* init = nullptr;
  const Checkpoint* resume = nullptr;
  double l1_penalty = 0.0;
  TrainHooks hooks;
};

// SGD with Nesterov momentum. Deterministic in (dataset, config, options):
// identical inputs reproduce identical parameters bit for bit.
ModelState train(const LabeledDataset& dataset, const Arch& arch,
                 const TrainConfig& config, const TrainOptions& options = {});

// Shared fine-tuning entry for the unlearning methods: constant lr, no
// augmentation, epochs == 0 returns the model unchanged.
ModelState fine_tune(const ModelState& model, const LabeledDataset& dataset,
                     const std::vector<std::uint32_t>& indices, int epochs,
                     double lr, std::uint64_t seed,
                     const TrainOptions& extra = {});

// Checkpoint container file: versioned header, arch as UTF-8 text,
// little-endian float32 parameter payload, trailing checksum.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ulbench

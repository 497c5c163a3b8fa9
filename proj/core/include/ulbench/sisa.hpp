#pragma once

// Sharded-isolated-sliced-aggregated exact unlearning. Training data is
// partitioned into shards, one model per shard, each trained incrementally
// slice by slice with a checkpoint after every slice. Forgetting a sample
// only ever retrains the shard(s) that contain it, restarting from the last
// checkpoint taken before the sample was introduced.

#include <vector>

#include "ulbench/train.hpp"

namespace ulbench {

struct SisaConfig {
  int shards = 5;
  int slices = 1;
  TrainConfig train;  // per-shard training; epochs are split across slices
  std::uint64_t seed = 0;

  void validate() const;
};

struct SisaMember {
  ModelState model;
  // Sample indices per slice (dataset space, sorted within each slice).
  std::vector<std::vector<std::uint32_t>> slices;
  // Parameter snapshot after each slice; checkpoints[j] is the state once
  // slices 0..j have been absorbed. checkpoints.back() == model.params.
  std::vector<std::vector<float>> checkpoints;
};

struct SisaEnsemble {
  SisaConfig config;
  Arch arch;
  std::vector<SisaMember> members;
};

SisaEnsemble sisa_train(const LabeledDataset& ds, const Arch& arch,
                        const SisaConfig& config);

// Removes `forget_indices` and retrains only the affected shards from their
// last clean checkpoints. Untouched members are copied bit for bit. If
// `retrained_shards` is given it receives the affected shard ids, sorted.
SisaEnsemble sisa_unlearn(const SisaEnsemble& ensemble, const LabeledDataset& ds,
                          const std::vector<std::uint32_t>& forget_indices,
                          std::vector<int>* retrained_shards = nullptr);

// Majority vote with ties broken by the lowest class index.
int majority_vote(const std::vector<int>& votes, int num_classes);

int sisa_predict(const SisaEnsemble& ensemble, const float* input);

// Mean of the member probability vectors (the soft aggregation used by the
// membership-inference metrics).
std::vector<float> sisa_mean_proba(const SisaEnsemble& ensemble, const float* input);

double sisa_evaluate(const SisaEnsemble& ensemble, const LabeledDataset& ds);
double sisa_evaluate(const SisaEnsemble& ensemble, const LabeledDataset& ds,
                     const std::vector<std::uint32_t>& indices);

}  // namespace ulbench

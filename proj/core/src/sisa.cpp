#include "ulbench/sisa.hpp"

#include <algorithm>
#include <unordered_set>

#include "ulbench/grad.hpp"

namespace ulbench {

void SisaConfig::validate() const {
  train.validate();
  if (shards <= 0) throw Error("sisa: shards must be positive");
  if (slices <= 0) throw Error("sisa: slices must be positive");
  if (train.epochs < slices)
    throw Error("sisa: epochs must be at least the slice count");
}

namespace {

std::vector<int> slice_epochs(const SisaConfig& cfg) {
  std::vector<int> ep(cfg.slices, cfg.train.epochs / cfg.slices);
  const int rem = cfg.train.epochs % cfg.slices;
  for (int j = 0; j < rem; ++j) ++ep[j];
  return ep;
}

// (Re)trains member `shard` from `start_slice` onward. Checkpoints before
// start_slice must already be valid.
void train_member_from(SisaMember& m, const LabeledDataset& ds, const Arch& arch,
                       const SisaConfig& cfg, int shard, int start_slice) {
  const auto ep = slice_epochs(cfg);
  std::vector<std::uint32_t> cumulative;
  for (int j = 0; j < start_slice; ++j)
    cumulative.insert(cumulative.end(), m.slices[j].begin(), m.slices[j].end());

  ModelState cur;
  cur.arch = arch;
  if (start_slice == 0)
    cur.params = init_params(arch, sub_seed(cfg.seed, "sisa_init",
                                            static_cast<std::uint64_t>(shard)));
  else
    cur.params = m.checkpoints[start_slice - 1];
  cur.trained_on = ds.fingerprint();

  m.checkpoints.resize(cfg.slices);
  for (int j = start_slice; j < cfg.slices; ++j) {
    cumulative.insert(cumulative.end(), m.slices[j].begin(), m.slices[j].end());
    std::sort(cumulative.begin(), cumulative.end());
    if (!cumulative.empty()) {
      TrainConfig tc = cfg.train;
      tc.epochs = ep[j];
      tc.seed = sub_seed(cfg.seed, "sisa_train",
                         static_cast<std::uint64_t>(shard) * 100000 +
                             static_cast<std::uint64_t>(j));
      TrainOptions opts;
      opts.indices = &cumulative;
      opts.init = &cur;
      cur = train(ds, arch, tc, opts);
    }
    m.checkpoints[j] = cur.params;
  }
  m.model = cur;
}

}  // namespace

SisaEnsemble sisa_train(const LabeledDataset& ds, const Arch& arch,
                        const SisaConfig& config) {
  config.validate();
  if (ds.empty()) throw Error("sisa: empty dataset");

  SisaEnsemble ens;
  ens.config = config;
  ens.arch = arch;
  ens.members.resize(config.shards);

  // Random balanced partition into shards, then contiguous slices per shard.
  auto all = ds.all_indices();
  Rng rng(sub_seed(config.seed, "sisa_shards"));
  rng.shuffle(all);
  const std::size_t n = all.size();
  for (int k = 0; k < config.shards; ++k) {
    const std::size_t lo = n * k / config.shards;
    const std::size_t hi = n * (k + 1) / config.shards;
    auto& m = ens.members[k];
    m.slices.resize(config.slices);
    const std::size_t sn = hi - lo;
    for (int j = 0; j < config.slices; ++j) {
      const std::size_t slo = lo + sn * j / config.slices;
      const std::size_t shi = lo + sn * (j + 1) / config.slices;
      m.slices[j].assign(all.begin() + slo, all.begin() + shi);
      std::sort(m.slices[j].begin(), m.slices[j].end());
    }
    train_member_from(m, ds, arch, config, k, 0);
  }
  return ens;
}

SisaEnsemble sisa_unlearn(const SisaEnsemble& ensemble, const LabeledDataset& ds,
                          const std::vector<std::uint32_t>& forget_indices,
                          std::vector<int>* retrained_shards) {
  SisaEnsemble out = ensemble;
  if (retrained_shards) retrained_shards->clear();
  const std::unordered_set<std::uint32_t> forget(forget_indices.begin(),
                                                 forget_indices.end());
  std::unordered_set<std::uint32_t> unseen = forget;
  for (const auto& m : out.members)
    for (const auto& slice : m.slices)
      for (auto i : slice) unseen.erase(i);
  if (!unseen.empty())
    throw Error("sisa_unlearn: forget index " +
                std::to_string(*unseen.begin()) + " not found in any shard");
  for (int k = 0; k < out.config.shards; ++k) {
    auto& m = out.members[k];
    int first_hit = -1;
    for (int j = 0; j < out.config.slices && first_hit < 0; ++j)
      for (auto i : m.slices[j])
        if (forget.count(i)) {
          first_hit = j;
          break;
        }
    if (first_hit < 0) continue;
    for (int j = first_hit; j < out.config.slices; ++j)
      std::erase_if(m.slices[j], [&](std::uint32_t i) { return forget.count(i) > 0; });
    train_member_from(m, ds, out.arch, out.config, k, first_hit);
    if (retrained_shards) retrained_shards->push_back(k);
  }
  return out;
}

int majority_vote(const std::vector<int>& votes, int num_classes) {
  if (votes.empty()) throw Error("majority_vote: no votes");
  std::vector<int> count(num_classes, 0);
  for (int v : votes) {
    if (v < 0 || v >= num_classes) throw Error("majority_vote: vote out of range");
    ++count[v];
  }
  int best = 0;
  for (int c = 1; c < num_classes; ++c)
    if (count[c] > count[best]) best = c;
  return best;
}

int sisa_predict(const SisaEnsemble& ensemble, const float* input) {
  std::vector<int> votes;
  votes.reserve(ensemble.members.size());
  for (const auto& m : ensemble.members)
    votes.push_back(predict_class(m.model, input));
  return majority_vote(votes, ensemble.arch.num_classes);
}

std::vector<float> sisa_mean_proba(const SisaEnsemble& ensemble, const float* input) {
  const int C = ensemble.arch.num_classes;
  std::vector<float> mean(C, 0.0f);
  for (const auto& m : ensemble.members) {
    const auto p = predict_proba(m.model, input);
    for (int c = 0; c < C; ++c) mean[c] += p[c];
  }
  const float inv = 1.0f / static_cast<float>(ensemble.members.size());
  for (auto& v : mean) v *= inv;
  return mean;
}

double sisa_evaluate(const SisaEnsemble& ensemble, const LabeledDataset& ds) {
  return sisa_evaluate(ensemble, ds, ds.all_indices());
}

double sisa_evaluate(const SisaEnsemble& ensemble, const LabeledDataset& ds,
                     const std::vector<std::uint32_t>& indices) {
  if (indices.empty()) throw Error("sisa_evaluate: empty index set");
  std::vector<std::size_t> correct(kParallelChunks, 0);
  parallel_chunks(indices.size(), [&](int chunk, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto i = indices[k];
      if (sisa_predict(ensemble, ds.input(i)) == ds.label(i)) ++correct[chunk];
    }
  });
  std::size_t total = 0;
  for (auto c : correct) total += c;
  return 100.0 * static_cast<double>(total) / static_cast<double>(indices.size());
}

}  // namespace ulbench

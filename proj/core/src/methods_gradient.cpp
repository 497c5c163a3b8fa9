#include <cstring>
#include <fstream>
#include <unordered_set>

#include "ulbench/unlearn.hpp"

namespace ulbench {

// Adds back the forget-set gradients taken at the initial weights, then
// fine-tunes on the sub-retain set.
UnlearnResult unrolling_unlearn(const UnlearnContext& ctx) {
  ctx.check();
  const int epochs = static_cast<int>(ctx.param("epochs"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "unrolling";
  if (!ctx.plan->forget_indices.empty()) {
    // Initial weights: a stored checkpoint if the caller kept one,
    // otherwise reconstructed from the training seed.
    std::vector<float> theta0;
    const auto theta0_path = ctx.artifact_store / "theta0.ckpt";
    if (!ctx.artifact_store.empty() && std::filesystem::exists(theta0_path)) {
      const Checkpoint ck = load_checkpoint(theta0_path);
      if (!(ck.model.arch == ctx.original->arch))
        throw Error("unrolling: theta0 checkpoint arch mismatch");
      theta0 = ck.model.params;
    } else {
      theta0 = init_params(ctx.original->arch, ctx.original->seed);
    }
    const auto batch = make_batch(*ctx.dataset, ctx.plan->forget_indices);
    std::vector<float> grad_sum;
    ce_batch_gradient(ctx.original->arch, theta0, batch, grad_sum,
                      /*mean=*/false);
    const float lr = static_cast<float>(ctx.train_config.lr);
    for (std::size_t j = 0; j < res.model.params.size(); ++j)
      res.model.params[j] += lr * grad_sum[j];
  }
  const auto sub = ctx.sub_retain_indices();
  res.model = fine_tune(res.model, *ctx.dataset, sub, epochs, 0.01,
                        sub_seed(ctx.train_config.seed, "unrolling_ft"));
  return res;
}

namespace {
constexpr char kLogMagic[8] = {'U', 'L', 'B', 'A', 'M', 'N', '0', '1'};
}

void AmnesiacLog::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("amnesiac log: cannot open " + path.string());
  os.write(kLogMagic, sizeof(kLogMagic));
  const std::uint64_t n = batch_indices.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (std::uint64_t b = 0; b < n; ++b) {
    const std::uint64_t ni = batch_indices[b].size();
    os.write(reinterpret_cast<const char*>(&ni), sizeof(ni));
    os.write(reinterpret_cast<const char*>(batch_indices[b].data()),
             static_cast<std::streamsize>(ni * sizeof(std::uint32_t)));
    const std::uint64_t nd = batch_deltas[b].size();
    os.write(reinterpret_cast<const char*>(&nd), sizeof(nd));
    os.write(reinterpret_cast<const char*>(batch_deltas[b].data()),
             static_cast<std::streamsize>(nd * sizeof(float)));
  }
  if (!os) throw Error("amnesiac log: write failed");
}

AmnesiacLog AmnesiacLog::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("amnesiac log: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kLogMagic, sizeof(magic)) != 0)
    throw Error("amnesiac log: bad magic");
  std::uint64_t n = 0;
  if (!is.read(reinterpret_cast<char*>(&n), sizeof(n)))
    throw Error("amnesiac log: truncated");
  AmnesiacLog log;
  log.batch_indices.resize(n);
  log.batch_deltas.resize(n);
  for (std::uint64_t b = 0; b < n; ++b) {
    std::uint64_t ni = 0;
    if (!is.read(reinterpret_cast<char*>(&ni), sizeof(ni)))
      throw Error("amnesiac log: truncated");
    log.batch_indices[b].resize(ni);
    if (!is.read(reinterpret_cast<char*>(log.batch_indices[b].data()),
                 static_cast<std::streamsize>(ni * sizeof(std::uint32_t))))
      throw Error("amnesiac log: truncated");
    std::uint64_t nd = 0;
    if (!is.read(reinterpret_cast<char*>(&nd), sizeof(nd)))
      throw Error("amnesiac log: truncated");
    log.batch_deltas[b].resize(nd);
    if (!is.read(reinterpret_cast<char*>(log.batch_deltas[b].data()),
                 static_cast<std::streamsize>(nd * sizeof(float))))
      throw Error("amnesiac log: truncated");
  }
  return log;
}

TrainHooks amnesiac_record(AmnesiacLog& log) {
  TrainHooks hooks;
  hooks.on_batch_update = [&log](int, const std::vector<std::uint32_t>& batch,
                                 const std::vector<float>& delta) {
    log.batch_indices.push_back(batch);
    log.batch_deltas.push_back(delta);
  };
  return hooks;
}

UnlearnResult amnesiac_unlearn(const UnlearnContext& ctx, const AmnesiacLog& log) {
  ctx.check();
  if (log.batch_indices.size() != log.batch_deltas.size())
    throw Error("amnesiac: inconsistent batch bookkeeping");
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "amnesiac";

  std::unordered_set<std::uint32_t> forget(ctx.plan->forget_indices.begin(),
                                           ctx.plan->forget_indices.end());
  std::size_t removed = 0;
  for (std::size_t b = 0; b < log.batch_indices.size(); ++b) {
    bool hit = false;
    for (auto i : log.batch_indices[b])
      if (forget.count(i)) { hit = true; break; }
    if (!hit) continue;
    const auto& delta = log.batch_deltas[b];
    if (delta.size() != res.model.params.size())
      throw Error("amnesiac: delta length does not match model");
    for (std::size_t j = 0; j < delta.size(); ++j)
      res.model.params[j] -= delta[j];
    ++removed;
  }
  res.diagnostics["batches_removed"] = static_cast<double>(removed);

  const int epochs = ctx.method_params.count("epochs")
                         ? static_cast<int>(ctx.method_params.at("epochs"))
                         : 20;
  const auto sub = ctx.sub_retain_indices();
  res.model = fine_tune(res.model, *ctx.dataset, sub, epochs, 0.01,
                        sub_seed(ctx.train_config.seed, "amnesiac_ft"));
  return res;
}

UnlearnResult amnesiac_unlearn(const UnlearnContext& ctx) {
  const auto path = ctx.artifact_store / "amnesiac_log.bin";
  if (ctx.artifact_store.empty() || !std::filesystem::exists(path))
    throw Error("amnesiac: training log not found at " + path.string());
  return amnesiac_unlearn(ctx, AmnesiacLog::load(path));
}

}  // namespace ulbench

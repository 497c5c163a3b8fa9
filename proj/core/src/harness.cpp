#include "ulbench/harness.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>
#include <openssl/evp.h>

namespace ulbench {

namespace {

using nlohmann::json;

// Per-scenario first-order unlearning rates from the experimental protocol.
double default_first_order_tau(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kAllClasses:
    case ScenarioKind::kClassWise:
      return 0.08;
    case ScenarioKind::kDepoison:
      return 0.00003;
    default:
      return 0.04;
  }
}

PoisonSpec parse_poison(const json& j) {
  PoisonSpec p;
  p.kind = poison_kind_from_string(j.at("kind").get<std::string>());
  p.budget = j.at("budget").get<std::size_t>();
  if (j.contains("trigger_size")) p.trigger_size = j["trigger_size"].get<int>();
  if (j.contains("trigger_location"))
    p.trigger_location = corner_from_string(j["trigger_location"].get<std::string>());
  if (j.contains("trigger_value")) p.trigger_value = j["trigger_value"].get<float>();
  if (j.contains("target_class")) p.target_class = j["target_class"].get<int>();
  if (j.contains("flip_pairs"))
    for (const auto& pair : j["flip_pairs"])
      p.flip_pairs.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
  return p;
}

}  // namespace

void ExperimentConfig::validate() const {
  train.validate();
  if (scenarios.empty()) throw Error("config: no scenarios");
  if (sub_retain_fraction <= 0.0 || sub_retain_fraction > 1.0)
    throw Error("config: sub_retain_fraction must be in (0,1]");
  const auto& reg = method_registry();
  for (const auto& m : methods) {
    if (m.method_id == "sisa" || m.method_id == "amnesiac") continue;
    if (reg.find(m.method_id) == reg.end())
      throw Error("config: unknown method '" + m.method_id + "'");
  }
  for (const auto& s : scenarios) {
    if (s.seeds.empty()) throw Error("config: scenario without seeds");
    for (auto b : s.budgets)
      if (b == 0) throw Error("config: zero budget");
    for (auto p : s.budget_percents)
      if (p <= 0.0 || p > 100.0)
        throw Error("config: budget percent out of (0,100]");
    if (s.kind == ScenarioKind::kDepoison && !s.poison)
      throw Error("config: depoison scenario needs a poison spec");
    if (s.kind != ScenarioKind::kDepoison && s.kind != ScenarioKind::kClassWise &&
        s.budgets.empty() && s.budget_percents.empty())
      throw Error("config: scenario needs budgets or budget_percents");
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.config_text = json_text;
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();
  if (j.contains("output_dir"))
    cfg.output_dir = j["output_dir"].get<std::string>();

  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    auto& ds = cfg.dataset;
    if (d.contains("kind")) ds.kind = d["kind"].get<std::string>();
    if (ds.kind == "synthetic") {
      auto& s = ds.synthetic;
      if (d.contains("num_classes")) s.num_classes = d["num_classes"].get<int>();
      if (d.contains("per_class")) s.per_class = d["per_class"].get<int>();
      if (d.contains("noise")) s.noise = d["noise"].get<double>();
      if (d.contains("jitter")) s.jitter = d["jitter"].get<double>();
      if (d.contains("seed")) s.seed = d["seed"].get<std::uint64_t>();
    } else if (ds.kind == "cifar10") {
      for (const auto& f : d.at("train_files"))
        ds.train_files.emplace_back(f.get<std::string>());
      for (const auto& f : d.at("test_files"))
        ds.test_files.emplace_back(f.get<std::string>());
      if (d.contains("max_per_class"))
        ds.max_per_class = d["max_per_class"].get<std::size_t>();
    } else if (ds.kind == "gaussian") {
      if (d.contains("classes")) ds.classes = d["classes"].get<int>();
      if (d.contains("per_class")) ds.per_class = d["per_class"].get<int>();
      if (d.contains("dim")) ds.dim = d["dim"].get<int>();
      if (d.contains("separation")) ds.separation = d["separation"].get<double>();
      if (d.contains("noise")) ds.noise = d["noise"].get<double>();
      if (d.contains("seed")) ds.seed = d["seed"].get<std::uint64_t>();
    } else {
      throw Error("config: unknown dataset kind '" + ds.kind + "'");
    }
  }

  if (j.contains("arch")) {
    const auto& a = j["arch"];
    if (a.contains("kind")) cfg.arch.kind = a["kind"].get<std::string>();
    if (a.contains("base_channels"))
      cfg.arch.base_channels = a["base_channels"].get<int>();
    if (a.contains("hidden")) cfg.arch.hidden = a["hidden"].get<int>();
  }

  if (j.contains("train")) {
    const auto& t = j["train"];
    auto& tc = cfg.train;
    if (t.contains("epochs")) tc.epochs = t["epochs"].get<int>();
    if (t.contains("batch_size")) tc.batch_size = t["batch_size"].get<int>();
    if (t.contains("lr")) tc.lr = t["lr"].get<double>();
    if (t.contains("momentum")) tc.momentum = t["momentum"].get<double>();
    if (t.contains("nesterov")) tc.nesterov = t["nesterov"].get<bool>();
    if (t.contains("schedule")) {
      const auto s = t["schedule"].get<std::string>();
      if (s == "cosine")
        tc.schedule = LrSchedule::kCosine;
      else if (s == "constant")
        tc.schedule = LrSchedule::kConstant;
      else
        throw Error("config: unknown lr schedule '" + s + "'");
    }
    if (t.contains("weight_decay")) tc.weight_decay = t["weight_decay"].get<double>();
    if (t.contains("augmentation")) tc.augmentation = t["augmentation"].get<bool>();
    if (t.contains("seed")) tc.seed = t["seed"].get<std::uint64_t>();
  }

  for (const auto& s : j.value("scenarios", json::array())) {
    ScenarioSpec sp;
    sp.kind = scenario_kind_from_string(s.at("kind").get<std::string>());
    if (s.contains("class")) sp.class_id = s["class"].get<int>();
    for (const auto& b : s.value("budgets", json::array()))
      sp.budgets.push_back(b.get<std::size_t>());
    for (const auto& p : s.value("budget_percents", json::array()))
      sp.budget_percents.push_back(p.get<double>());
    for (const auto& sd : s.value("seeds", json::array()))
      sp.seeds.push_back(sd.get<std::uint64_t>());
    if (s.contains("poison")) sp.poison = parse_poison(s["poison"]);
    cfg.scenarios.push_back(std::move(sp));
  }

  for (const auto& m : j.value("methods", json::array())) {
    MethodSpec spec;
    if (m.is_string()) {
      spec.method_id = m.get<std::string>();
    } else {
      spec.method_id = m.at("id").get<std::string>();
      // Bind before iterating: items() would otherwise range over a proxy
      // into a destroyed temporary.
      const json hp = m.value("hyperparams", json::object());
      for (const auto& [k, v] : hp.items())
        spec.hyperparams[k] = v.get<double>();
    }
    cfg.methods.push_back(std::move(spec));
  }

  if (j.contains("mia_features")) {
    for (const auto& f : j["mia_features"])
      cfg.mia_features.push_back(mia_kind_from_string(f.get<std::string>()));
  } else {
    cfg.mia_features.assign(std::begin(kAllMiaKinds), std::end(kAllMiaKinds));
  }
  if (j.contains("mia_n_per_side"))
    cfg.mia_n_per_side = j["mia_n_per_side"].get<std::size_t>();
  if (j.contains("sub_retain_fraction"))
    cfg.sub_retain_fraction = j["sub_retain_fraction"].get<double>();
  if (j.contains("sisa_shards")) cfg.sisa_shards = j["sisa_shards"].get<int>();
  if (j.contains("sisa_slices")) cfg.sisa_slices = j["sisa_slices"].get<int>();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr))
    throw Error("sha256: digest failure");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

ResultsStore::ResultsStore(std::filesystem::path out_dir)
    : dir_(std::move(out_dir)) {
  std::filesystem::create_directories(dir_);
  std::filesystem::create_directories(dir_ / "plots");
  std::filesystem::create_directories(dir_ / "artifacts");
  const auto csv = dir_ / "results.csv";
  if (std::filesystem::exists(csv)) rows_ = load_rows(dir_);
  if (!std::filesystem::exists(csv)) {
    std::ofstream os(csv);
    os << report_csv_header() << "\n";
  }
}

void ResultsStore::write_manifest(const std::string& experiment_name,
                                  const std::string& config_hash) {
  json j;
  j["experiment"] = experiment_name;
  j["config_sha256"] = config_hash;
  j["rows"] = rows_.size();
  std::ofstream os(dir_ / "manifest.json");
  if (!os) throw Error("results: cannot write manifest");
  os << j.dump(2) << "\n";
}

void ResultsStore::append(MetricsReport row) {
  row.duplicate = std::any_of(rows_.begin(), rows_.end(),
                              [&](const MetricsReport& r) {
                                return r.cell_key() == row.cell_key();
                              });
  std::ofstream csv(dir_ / "results.csv", std::ios::app);
  csv << to_csv_row(row) << "\n";
  std::ofstream jsonl(dir_ / "results.jsonl", std::ios::app);
  jsonl << to_jsonl(row) << "\n";
  if (!csv || !jsonl) throw Error("results: append failed");
  rows_.push_back(std::move(row));
}

std::vector<MetricsReport> ResultsStore::load_rows(
    const std::filesystem::path& out_dir) {
  std::ifstream is(out_dir / "results.csv");
  if (!is) throw Error("results: cannot open " + (out_dir / "results.csv").string());
  std::vector<MetricsReport> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(parse_csv_row(line));
  return rows;
}

std::pair<LabeledDataset, LabeledDataset> build_datasets(const DatasetSpec& spec) {
  if (spec.kind == "synthetic") {
    return {make_synthetic_images(spec.synthetic, Split::kTrain, "synth_train"),
            make_synthetic_images(spec.synthetic, Split::kTest, "synth_test")};
  }
  if (spec.kind == "cifar10") {
    return {load_cifar10_batches(spec.train_files, "cifar_train", Split::kTrain,
                                 spec.max_per_class),
            load_cifar10_batches(spec.test_files, "cifar_test", Split::kTest,
                                 spec.max_per_class)};
  }
  if (spec.kind == "gaussian") {
    return {make_gaussian_mixture(spec.classes, spec.per_class, spec.dim,
                                  spec.separation, spec.noise, spec.seed,
                                  Split::kTrain, "gauss_train"),
            make_gaussian_mixture(spec.classes, spec.per_class, spec.dim,
                                  spec.separation, spec.noise, spec.seed,
                                  Split::kTest, "gauss_test")};
  }
  throw Error("dataset: unknown kind '" + spec.kind + "'");
}

Arch build_arch(const ArchSpec& spec, Shape3 input, int num_classes) {
  if (spec.kind == "cnn3")
    return make_cnn3(input, num_classes, spec.base_channels);
  if (spec.kind == "mlp") return make_mlp(input, spec.hidden, num_classes);
  if (spec.kind == "logistic") return make_logistic(input, num_classes);
  throw Error("arch: unknown kind '" + spec.kind + "'");
}

ModelState train_original(const ExperimentConfig& config,
                          const LabeledDataset& train_ds) {
  const Arch arch =
      build_arch(config.arch, train_ds.shape(), train_ds.num_classes());
  const auto ckpt_path = config.output_dir / "artifacts" / "original.ckpt";
  if (std::filesystem::exists(ckpt_path)) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    if (ck.model.arch == arch && ck.model.seed == config.train.seed &&
        ck.model.trained_on == train_ds.fingerprint())
      return ck.model;
  }
  ModelState model = train(train_ds, arch, config.train);
  std::filesystem::create_directories(ckpt_path.parent_path());
  Checkpoint ck;
  ck.model = model;
  ck.epoch = config.train.epochs;
  save_checkpoint(ck, ckpt_path);
  return model;
}

namespace {

struct RetrainRef {
  ModelState model;
  double wall_seconds = 0.0;
  bool ok = false;
  std::string error;
};

struct CellMetricsInputs {
  const LabeledDataset* train_ds = nullptr;
  const LabeledDataset* test_ds = nullptr;
  const ScenarioPlan* plan = nullptr;
  const RetrainRef* ref = nullptr;
  const ExperimentConfig* config = nullptr;
  std::uint64_t seed = 0;
};

void fill_metrics(MetricsReport& row, const ProbaFn& proba,
                  const std::function<double(const LabeledDataset&,
                                             const std::vector<std::uint32_t>&)>&
                      accuracy,
                  const std::vector<float>* params,
                  const CellMetricsInputs& in) {
  const auto& plan = *in.plan;
  row.ta = accuracy(*in.test_ds, in.test_ds->all_indices());
  row.ra = plan.retain_indices.empty()
               ? 0.0
               : accuracy(*in.train_ds, plan.retain_indices);
  row.fa_raw = accuracy(*in.train_ds, plan.forget_indices);
  if (in.ref->ok) {
    const double fa_ref =
        evaluate(in.ref->model, *in.train_ds, plan.forget_indices);
    row.fa_disc = row.fa_raw - fa_ref;
    if (params)
      row.l2 = l2_distance(*params, in.ref->model.params, in.ref->model.params);
  }

  const std::size_t n_test = in.test_ds->size();
  const std::size_t cap = in.config->mia_n_per_side
                              ? in.config->mia_n_per_side
                              : std::size_t(5000);
  const std::size_t n_per_side =
      std::min({plan.retain_indices.size(), n_test, cap});
  const int C = in.train_ds->num_classes();
  if (n_per_side > 0 && !plan.forget_indices.empty()) {
    for (auto kind : in.config->mia_features) {
      const auto predictor = train_mia_predictor(
          proba, C, *in.train_ds, plan.retain_indices, *in.test_ds, kind,
          n_per_side, sub_seed(in.seed, "mia", static_cast<int>(kind)));
      row.mia[to_string(kind)] =
          mia_efficacy(predictor, proba, C, *in.train_ds, plan.forget_indices);
    }
  }
}

std::vector<std::size_t> resolve_budgets(const ScenarioSpec& spec,
                                         std::size_t train_size,
                                         const LabeledDataset& ds) {
  std::vector<std::size_t> budgets = spec.budgets;
  for (double p : spec.budget_percents)
    budgets.push_back(static_cast<std::size_t>(
        std::llround(p / 100.0 * static_cast<double>(train_size))));
  if (spec.kind == ScenarioKind::kClassWise)
    budgets = {ds.indices_of_class(spec.class_id).size()};
  if (spec.kind == ScenarioKind::kDepoison) budgets = {spec.poison->budget};
  return budgets;
}

}  // namespace

ResultsStore run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto [train_ds, test_ds] = build_datasets(config.dataset);
  ResultsStore store(config.output_dir);
  store.write_manifest(config.name, sha256_hex(config.config_text));
  if (config.methods.empty()) return store;

  const Arch arch =
      build_arch(config.arch, train_ds.shape(), train_ds.num_classes());

  const bool wants_amnesiac =
      std::any_of(config.methods.begin(), config.methods.end(),
                  [](const MethodSpec& m) { return m.method_id == "amnesiac"; });

  // Clean original model (shared across non-depoison scenarios). When
  // Amnesiac is requested the original run also records its update log.
  ModelState original;
  AmnesiacLog amnesiac_log;
  const auto amnesiac_dir = config.output_dir / "artifacts" / "amnesiac";
  if (wants_amnesiac) {
    const auto log_path = amnesiac_dir / "amnesiac_log.bin";
    const auto ckpt_path = amnesiac_dir / "original.ckpt";
    if (std::filesystem::exists(log_path) && std::filesystem::exists(ckpt_path)) {
      original = load_checkpoint(ckpt_path).model;
      amnesiac_log = AmnesiacLog::load(log_path);
    } else {
      TrainOptions opts;
      opts.hooks = amnesiac_record(amnesiac_log);
      original = train(train_ds, arch, config.train, opts);
      std::filesystem::create_directories(amnesiac_dir);
      amnesiac_log.save(log_path);
      Checkpoint ck;
      ck.model = original;
      ck.epoch = config.train.epochs;
      save_checkpoint(ck, ckpt_path);
    }
  } else {
    original = train_original(config, train_ds);
  }

  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const auto& sspec = config.scenarios[si];
    const auto budgets = resolve_budgets(sspec, train_ds.size(), train_ds);
    for (std::size_t budget : budgets) {
      for (std::uint64_t seed : sspec.seeds) {
        // Cell dataset, plan, and original model (depoison swaps both).
        std::optional<LabeledDataset> poisoned_ds;
        std::optional<PoisonSpec> poison;
        ScenarioPlan plan;
        ModelState cell_original = original;
        const LabeledDataset* cell_ds = &train_ds;
        try {
          switch (sspec.kind) {
            case ScenarioKind::kOneClass:
              plan = select_one_class(train_ds, sspec.class_id, budget, seed);
              break;
            case ScenarioKind::kAllClasses:
              plan = select_all_classes(train_ds, budget, seed);
              break;
            case ScenarioKind::kClassWise:
              plan = select_class_wise(train_ds, sspec.class_id);
              plan.seed = seed;
              break;
            case ScenarioKind::kWorstCase:
              plan = select_worst_case(train_ds, original, budget);
              plan.seed = seed;
              break;
            case ScenarioKind::kBestCase:
              plan = select_best_case(train_ds, original, budget);
              plan.seed = seed;
              break;
            case ScenarioKind::kDepoison: {
              poison = *sspec.poison;
              poison->seed = sub_seed(seed, "poison");
              auto built = build_depoison_scenario(train_ds, *poison, seed);
              poisoned_ds.emplace(std::move(built.first));
              plan = std::move(built.second);
              cell_ds = &*poisoned_ds;
              // Victim model trained on the poisoned data, cached per cell.
              const auto vdir = config.output_dir / "artifacts" /
                                ("poisoned_s" + std::to_string(si) + "_seed" +
                                 std::to_string(seed));
              const auto vpath = vdir / "original.ckpt";
              if (std::filesystem::exists(vpath)) {
                cell_original = load_checkpoint(vpath).model;
              } else {
                cell_original = train(*cell_ds, arch, config.train);
                std::filesystem::create_directories(vdir);
                Checkpoint ck;
                ck.model = cell_original;
                ck.epoch = config.train.epochs;
                save_checkpoint(ck, vpath);
              }
              break;
            }
          }
        } catch (const std::exception& e) {
          MetricsReport row;
          row.method_id = "(scenario)";
          row.scenario = to_string(sspec.kind);
          row.budget = budget;
          row.seed = seed;
          row.ok = false;
          row.error = e.what();
          store.append(std::move(row));
          continue;
        }

        UnlearnContext base_ctx;
        base_ctx.original = &cell_original;
        base_ctx.dataset = cell_ds;
        base_ctx.plan = &plan;
        base_ctx.sub_retain_fraction = config.sub_retain_fraction;
        base_ctx.train_config = config.train;
        base_ctx.train_config.seed = seed;

        const std::string cell_tag = to_string(sspec.kind) + "_b" +
                                     std::to_string(budget) + "_s" +
                                     std::to_string(seed);

        // Gold-standard retrain reference, shared by every method in the cell.
        RetrainRef ref;
        try {
          UnlearnContext rctx = base_ctx;
          rctx.artifact_store =
              config.output_dir / "artifacts" / "retrain" / cell_tag;
          UnlearnResult rres = unlearn(make_method_spec("retrain"), rctx);
          ref.model = std::move(rres.model);
          ref.wall_seconds = rres.wall_seconds;
          ref.ok = true;
        } catch (const std::exception& e) {
          ref.error = e.what();
        }

        CellMetricsInputs inputs;
        inputs.train_ds = cell_ds;
        inputs.test_ds = &test_ds;
        inputs.plan = &plan;
        inputs.ref = &ref;
        inputs.config = &config;
        inputs.seed = seed;

        for (const auto& mspec : config.methods) {
          MetricsReport row;
          row.method_id = mspec.method_id;
          row.scenario = to_string(sspec.kind);
          row.target_class = plan.target_class;
          row.budget = budget;
          row.seed = seed;
          try {
            if (mspec.method_id == "sisa") {
              SisaConfig sc;
              sc.shards = config.sisa_shards;
              sc.slices = config.sisa_slices;
              sc.train = base_ctx.train_config;
              sc.seed = seed;
              const SisaEnsemble ens = sisa_train(*cell_ds, arch, sc);
              const auto t0 = std::chrono::steady_clock::now();
              const SisaEnsemble unlearned =
                  sisa_unlearn(ens, *cell_ds, plan.forget_indices);
              const auto t1 = std::chrono::steady_clock::now();
              row.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
              ProbaFn proba = [&unlearned](const float* x) {
                return sisa_mean_proba(unlearned, x);
              };
              fill_metrics(
                  row, proba,
                  [&unlearned](const LabeledDataset& ds,
                               const std::vector<std::uint32_t>& idx) {
                    return sisa_evaluate(unlearned, ds, idx);
                  },
                  nullptr, inputs);
              std::uint64_t ckpt_bytes = 0;
              for (const auto& m : unlearned.members)
                for (const auto& c : m.checkpoints)
                  ckpt_bytes += c.size() * sizeof(float);
              row.storage_bytes = ckpt_bytes;
              if (poison && poison->kind == PoisonKind::kBackdoor) {
                // ASR over the ensemble's majority vote.
                std::size_t hit = 0, total = 0;
                std::vector<float> x(test_ds.shape().size());
                for (std::size_t i = 0; i < test_ds.size(); ++i) {
                  if (test_ds.label(i) == poison->target_class) continue;
                  std::copy_n(test_ds.input(i), x.size(), x.begin());
                  stamp_trigger(test_ds.shape(), x.data(), *poison);
                  ++total;
                  if (sisa_predict(unlearned, x.data()) == poison->target_class)
                    ++hit;
                }
                if (total)
                  row.asr = 100.0 * static_cast<double>(hit) /
                            static_cast<double>(total);
              }
            } else {
              UnlearnResult result;
              if (mspec.method_id == "amnesiac") {
                if (sspec.kind == ScenarioKind::kDepoison)
                  throw Error(
                      "amnesiac: update log was recorded on the clean "
                      "original; depoison cells are unsupported");
                UnlearnContext ctx = base_ctx;
                ctx.method_params = mspec.hyperparams;
                ctx.artifact_store = amnesiac_dir;
                const auto t0 = std::chrono::steady_clock::now();
                result = amnesiac_unlearn(ctx, amnesiac_log);
                const auto t1 = std::chrono::steady_clock::now();
                result.wall_seconds =
                    std::chrono::duration<double>(t1 - t0).count();
                result.aux_storage_bytes = dir_bytes(amnesiac_dir);
              } else {
                MethodSpec spec = mspec;
                if (spec.method_id == "first_order" &&
                    spec.hyperparams.find("tau") == spec.hyperparams.end())
                  spec.hyperparams["tau"] = default_first_order_tau(sspec.kind);
                UnlearnContext ctx = base_ctx;
                ctx.artifact_store = config.output_dir / "artifacts" /
                                     spec.method_id / cell_tag;
                result = unlearn(spec, ctx);
              }
              const ModelState& model = result.model;
              ProbaFn proba = [&model](const float* x) {
                return predict_proba(model, x);
              };
              fill_metrics(
                  row, proba,
                  [&model](const LabeledDataset& ds,
                           const std::vector<std::uint32_t>& idx) {
                    return evaluate(model, ds, idx);
                  },
                  &model.params, inputs);
              row.wall_seconds = result.wall_seconds;
              row.storage_bytes = result.aux_storage_bytes;
              if (poison && poison->kind == PoisonKind::kBackdoor)
                row.asr = attack_success_rate(model, test_ds, *poison);
            }
            if (ref.ok && ref.wall_seconds > 0.0)
              row.rte_ratio = row.wall_seconds / ref.wall_seconds;
          } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
          }
          store.append(std::move(row));
        }
      }
    }
  }
  store.write_manifest(config.name, sha256_hex(config.config_text));
  return store;
}

double metric_value(const MetricsReport& row, const std::string& metric) {
  if (metric == "ta") return row.ta;
  if (metric == "ra") return row.ra;
  if (metric == "fa_raw") return row.fa_raw;
  if (metric == "fa_disc") return row.fa_disc;
  if (metric == "l2") return row.l2;
  if (metric == "rte_ratio") return row.rte_ratio;
  if (metric == "wall_seconds") return row.wall_seconds;
  if (metric == "asr") return row.asr.value_or(0.0);
  if (metric.rfind("mia_", 0) == 0) {
    const auto it = row.mia.find(metric.substr(4));
    if (it != row.mia.end()) return it->second;
    throw Error("unknown MIA metric '" + metric + "'");
  }
  throw Error("unknown metric '" + metric + "'");
}

std::vector<std::filesystem::path> emit_budget_plot(
    const std::vector<MetricsReport>& rows, const std::string& metric,
    const std::filesystem::path& plot_dir) {
  std::filesystem::create_directories(plot_dir);
  std::vector<std::string> scenarios;
  for (const auto& r : rows)
    if (r.ok && std::find(scenarios.begin(), scenarios.end(), r.scenario) ==
                    scenarios.end())
      scenarios.push_back(r.scenario);

  std::vector<std::filesystem::path> written;
  for (const auto& sc : scenarios) {
    // method -> sorted (budget, mean metric over seeds)
    std::vector<std::string> methods;
    for (const auto& r : rows)
      if (r.ok && r.scenario == sc &&
          std::find(methods.begin(), methods.end(), r.method_id) == methods.end())
        methods.push_back(r.method_id);
    std::vector<PlotSeries> series;
    for (const auto& m : methods) {
      std::map<std::size_t, std::pair<double, int>> acc;
      for (const auto& r : rows)
        if (r.ok && r.scenario == sc && r.method_id == m && !r.duplicate) {
          auto& a = acc[r.budget];
          a.first += metric_value(r, metric);
          a.second += 1;
        }
      PlotSeries s;
      s.label = m;
      for (const auto& [b, v] : acc) {
        s.x.push_back(static_cast<double>(b));
        s.y.push_back(v.first / v.second);
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
    if (series.empty()) continue;
    const auto svg = plot_dir / (sc + "_" + metric + ".svg");
    const auto csv = plot_dir / (sc + "_" + metric + ".csv");
    write_svg_plot(svg, sc + ": " + metric + " vs budget", "forget budget",
                   metric, series);
    write_plot_csv(csv, series);
    written.push_back(svg);
    written.push_back(csv);
  }
  return written;
}

}  // namespace ulbench

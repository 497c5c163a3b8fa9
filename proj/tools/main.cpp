// Command-line front end: train / run / report / plot / list-methods.

#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "ulbench/harness.hpp"

namespace {

using namespace ulbench;

// Applies --seed and --methods overrides on top of the loaded config.
ExperimentConfig load_config(const std::string& path, std::uint64_t* seed,
                             const std::string& methods,
                             const std::string& out_dir) {
  ExperimentConfig cfg = load_experiment_config(path);
  if (seed) {
    cfg.train.seed = *seed;
    for (auto& s : cfg.scenarios) s.seeds = {*seed};
  }
  if (!methods.empty()) {
    std::set<std::string> keep;
    std::stringstream ss(methods);
    std::string id;
    while (std::getline(ss, id, ',')) keep.insert(id);
    std::erase_if(cfg.methods, [&](const MethodSpec& m) {
      return keep.find(m.method_id) == keep.end();
    });
    for (const auto& id2 : keep) {
      const bool present = std::any_of(
          cfg.methods.begin(), cfg.methods.end(),
          [&](const MethodSpec& m) { return m.method_id == id2; });
      if (!present) {
        MethodSpec m;
        m.method_id = id2;
        cfg.methods.push_back(std::move(m));
      }
    }
    cfg.validate();
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"machine unlearning benchmark"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path, out_dir, methods, metric = "fa_raw", scenario;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    auto* opt = cmd->add_option("--config", config_path, "experiment JSON");
    if (need_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--seed", seed, "override every seed in the config")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--methods", methods, "comma-separated method filter");
  };

  auto* train_cmd =
      app.add_subcommand("train", "train and checkpoint the original model");
  add_common(train_cmd, true);

  auto* run_cmd = app.add_subcommand("run", "run the full experiment matrix");
  add_common(run_cmd, true);

  auto* report_cmd =
      app.add_subcommand("report", "print comparison tables from a results dir");
  report_cmd->add_option("--out", out_dir, "results directory")->required();
  report_cmd->add_option("--scenario", scenario, "restrict to one scenario");

  auto* plot_cmd =
      app.add_subcommand("plot", "emit budget-sweep plots from a results dir");
  plot_cmd->add_option("--out", out_dir, "results directory")->required();
  plot_cmd->add_option("--metric", metric, "metric to plot (default fa_raw)");

  auto* list_cmd = app.add_subcommand("list-methods", "print available methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (list_cmd->parsed()) {
      for (const auto& id : registered_method_ids()) std::cout << id << "\n";
      std::cout << "# two-phase interfaces (not in the registry): amnesiac, "
                   "sisa\n";
      return 0;
    }
    if (train_cmd->parsed()) {
      ExperimentConfig cfg = load_config(
          config_path, seed_set ? &seed : nullptr, methods, out_dir);
      const auto [train_ds, test_ds] = build_datasets(cfg.dataset);
      const ModelState model = train_original(cfg, train_ds);
      std::cout << "trained original: TA " << evaluate(model, test_ds)
                << "  RA " << evaluate(model, train_ds) << "\n";
      std::cout << "checkpoint: "
                << (cfg.output_dir / "artifacts" / "original.ckpt").string()
                << "\n";
      return 0;
    }
    if (run_cmd->parsed()) {
      ExperimentConfig cfg = load_config(
          config_path, seed_set ? &seed : nullptr, methods, out_dir);
      const ResultsStore store = run_experiment(cfg);
      std::size_t failed = 0;
      for (const auto& r : store.rows())
        if (!r.ok) ++failed;
      std::cout << store.rows().size() << " rows (" << failed << " failed) -> "
                << (store.dir() / "results.csv").string() << "\n";
      return failed == 0 ? 0 : 1;
    }
    if (report_cmd->parsed()) {
      const auto rows = ResultsStore::load_rows(out_dir);
      std::set<std::string> scenarios;
      for (const auto& r : rows)
        if (scenario.empty() || r.scenario == scenario)
          scenarios.insert(r.scenario);
      if (scenarios.empty()) {
        std::cerr << "error: no matching rows\n";
        return 1;
      }
      for (const auto& sc : scenarios) std::cout << emit_table(rows, sc) << "\n";
      return 0;
    }
    if (plot_cmd->parsed()) {
      const auto rows = ResultsStore::load_rows(out_dir);
      const auto files = emit_budget_plot(
          rows, metric, std::filesystem::path(out_dir) / "plots");
      for (const auto& f : files) std::cout << f.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

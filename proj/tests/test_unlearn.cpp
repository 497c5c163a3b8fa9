// The method catalog: registry dispatch, identity limits, and per-method
// analytic oracles on small models.

#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "helpers.hpp"
#include "ulbench/unlearn.hpp"

using namespace ulbench;
using namespace ulbench::testutil;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  LabeledDataset ds;
  ModelState model;
  ScenarioPlan plan;
  UnlearnContext ctx;

  explicit Fixture(ScenarioKind kind = ScenarioKind::kOneClass,
                   std::uint64_t seed = 3)
      : ds(make_gaussian_mixture(4, 20, 6, 3.0, 1.0, seed, Split::kTrain)) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.lr = 0.05;
    cfg.seed = seed;
    model = train(ds, make_mlp(Shape3{6, 1, 1}, 10, 4), cfg);
    plan = kind == ScenarioKind::kClassWise
               ? select_class_wise(ds, 0)
               : select_one_class(ds, 0, 8, seed);
    ctx.original = &model;
    ctx.dataset = &ds;
    ctx.plan = &plan;
    ctx.train_config = cfg;
  }
};

}  // namespace

TEST_CASE("registry lists exactly the nineteen dispatchable methods") {
  const std::vector<std::string> expect = {
      "bad_t",       "boundary_expand", "boundary_shrink", "ct",
      "fcs",         "first_order",     "fisher",          "gkt",
      "l1_sparse",   "msg",             "niu",             "pgu",
      "retrain",     "salun",           "scrub",           "second_order",
      "ssd",         "unrolling",       "unsir"};
  auto ids = registered_method_ids();
  std::sort(ids.begin(), ids.end());
  CHECK(ids == expect);
  CHECK(ids.size() == 19);
}

TEST_CASE("unlearn dispatch validates its inputs") {
  Fixture f;
  CHECK_THROWS_AS(unlearn(make_method_spec("no_such_method"), f.ctx), Error);

  // Unknown hyperparameter keys are rejected loudly.
  auto spec = make_method_spec("first_order");
  spec.hyperparams["misspelled"] = 1.0;
  CHECK_THROWS_AS(unlearn(spec, f.ctx), Error);

  // Class-wise-only methods refuse other plans.
  CHECK_THROWS_AS(unlearn(make_method_spec("unsir"), f.ctx), Error);
  CHECK_THROWS_AS(unlearn(make_method_spec("gkt"), f.ctx), Error);

  // "retrain" delegates through the same entry point.
  auto res = unlearn(make_method_spec("retrain"), f.ctx);
  CHECK(res.method_id == "retrain");
  CHECK(res.wall_seconds >= 0.0);
  CHECK(res.model.params.size() == f.model.params.size());
}

TEST_CASE("retrain: fresh training on the retain set only") {
  Fixture f(ScenarioKind::kClassWise);
  const auto res = retrain_unlearn(f.ctx);
  // The forgotten class was never seen: its accuracy collapses to zero while
  // the rest of the data stays learnable.
  CHECK(evaluate(res.model, f.ds, f.plan.forget_indices) <= 5.0);
  CHECK(evaluate(res.model, f.ds, f.plan.retain_indices) >= 90.0);

  // Retraining under an empty retain set is meaningless.
  ScenarioPlan empty_retain = f.plan;
  empty_retain.retain_indices.clear();
  empty_retain.forget_indices = f.ds.all_indices();
  UnlearnContext ctx = f.ctx;
  ctx.plan = &empty_retain;
  CHECK_THROWS_AS(retrain_unlearn(ctx), Error);
}

TEST_CASE("identity limits return the original parameters bitwise") {
  Fixture f(ScenarioKind::kClassWise);
  auto run = [&](const std::string& id,
                 std::map<std::string, double> overrides) {
    auto spec = make_method_spec(id);
    for (auto& [k, v] : overrides) spec.hyperparams[k] = v;
    const auto res = unlearn(spec, f.ctx);
    INFO("method ", id);
    CHECK(bitwise_equal(res.model.params, f.model.params));
  };

  run("first_order", {{"tau", 0.0}});
  run("fisher", {{"alpha", 0.0}});
  run("boundary_shrink", {{"epochs", 0.0}});
  run("boundary_expand", {{"epochs", 0.0}});
  run("salun", {{"epochs", 0.0}});
  run("salun", {{"fraction", 0.0}});
  run("bad_t", {{"epochs", 0.0}});
  run("scrub", {{"epochs", 0.0}});
  run("fcs", {{"epochs", 0.0}, {"ft_epochs", 0.0}});
  run("ct", {{"epochs", 0.0}});
  run("l1_sparse", {{"gamma", 0.0}, {"sparsity", 0.0}, {"epochs", 0.0}});
  run("pgu", {{"steps", 0.0}});
  run("msg", {{"q", 0.0}, {"epochs", 0.0}});
  run("niu", {{"noise", 0.0}, {"layer_epochs", 0.0}, {"epochs", 0.0}});
  run("unsir", {{"impair_epochs", 0.0}, {"repair_epochs", 0.0}});
}

TEST_CASE("empty forget set short-circuits the influence methods") {
  Fixture f;
  ScenarioPlan none = f.plan;
  none.retain_indices = f.ds.all_indices();
  none.forget_indices.clear();
  none.budget = 0;
  UnlearnContext ctx = f.ctx;
  ctx.plan = &none;

  // Direct method calls bypass the dispatcher's default merging, so each
  // call gets its registry defaults spelled out.
  ctx.method_params = {{"tau", 0.04}};
  CHECK(bitwise_equal(influence_first_order(ctx).model.params, f.model.params));
  ctx.method_params = {{"damping", 0.01}, {"max_iters", 100}};
  CHECK(bitwise_equal(influence_second_order(ctx).model.params,
                      f.model.params));
  ctx.method_params = {{"alpha", 10.0}, {"lambda", 1.0}};
  CHECK(bitwise_equal(ssd_unlearn(ctx).model.params, f.model.params));
}

TEST_CASE("first-order update matches the analytic gradient sum") {
  // Logistic model: per-sample CE gradient is (p - onehot(y)) x^T, so the
  // update can be recomputed directly from predicted probabilities.
  const auto ds = make_gaussian_mixture(3, 10, 4, 2.5, 1.0, 11, Split::kTrain);
  ModelState model;
  model.arch = make_logistic(Shape3{4, 1, 1}, 3);
  model.params = init_params(model.arch, 5);

  auto plan = select_one_class(ds, 1, 4, 7);
  UnlearnContext ctx;
  ctx.original = &model;
  ctx.dataset = &ds;
  ctx.plan = &plan;
  ctx.method_params["tau"] = 0.01;

  const auto res = influence_first_order(ctx);

  std::vector<double> grad(model.params.size(), 0.0);
  for (auto i : plan.forget_indices) {
    const auto p = predict_proba(model, ds.input(i));
    for (int c = 0; c < 3; ++c) {
      const double d = static_cast<double>(p[c]) - (c == ds.label(i) ? 1.0 : 0.0);
      for (int d4 = 0; d4 < 4; ++d4)
        grad[static_cast<std::size_t>(c) * 4 + d4] += d * ds.input(i)[d4];
      grad[12 + c] += d;  // bias block
    }
  }
  for (std::size_t j = 0; j < model.params.size(); ++j) {
    const double expect = static_cast<double>(model.params[j]) + 0.01 * grad[j];
    CHECK(std::abs(res.model.params[j] - expect) < 1e-5);
  }
}

TEST_CASE("unrolling adds back forget gradients taken at the initial weights") {
  const auto ds = make_gaussian_mixture(2, 8, 3, 2.0, 1.0, 19, Split::kTrain);
  ModelState model;
  model.arch = make_logistic(Shape3{3, 1, 1}, 2);
  model.params = init_params(model.arch, 23);
  model.seed = 23;  // theta_0 is reconstructible from the model's own seed

  auto plan = select_one_class(ds, 0, 3, 2);
  UnlearnContext ctx;
  ctx.original = &model;
  ctx.dataset = &ds;
  ctx.plan = &plan;
  ctx.train_config.lr = 0.05;
  ctx.method_params["epochs"] = 0.0;  // isolate the add-back term

  const auto res = unrolling_unlearn(ctx);

  const auto theta0 = init_params(model.arch, 23);
  std::vector<double> grad(model.params.size(), 0.0);
  for (auto i : plan.forget_indices) {
    ModelState at0{model.arch, theta0, 0, 0, 0};
    const auto p = predict_proba(at0, ds.input(i));
    for (int c = 0; c < 2; ++c) {
      const double d = static_cast<double>(p[c]) - (c == ds.label(i) ? 1.0 : 0.0);
      for (int k = 0; k < 3; ++k)
        grad[static_cast<std::size_t>(c) * 3 + k] += d * ds.input(i)[k];
      grad[6 + c] += d;
    }
  }
  for (std::size_t j = 0; j < model.params.size(); ++j)
    CHECK(std::abs(res.model.params[j] -
                   (static_cast<double>(model.params[j]) + 0.05 * grad[j])) <
          1e-5);

  // Empty forget set: the add-back term vanishes entirely.
  ScenarioPlan none = plan;
  none.retain_indices = ds.all_indices();
  none.forget_indices.clear();
  ctx.plan = &none;
  CHECK(bitwise_equal(unrolling_unlearn(ctx).model.params, model.params));
}

TEST_CASE("ssd leaves parameters alone when forget and retain agree") {
  // Every sample identical: the two Fisher diagonals coincide, and with
  // alpha > 1 no parameter passes the selection inequality.
  std::vector<std::vector<float>> rows(12, {1.0f, -0.5f, 0.25f});
  std::vector<int> labels(12, 0);
  for (int i = 6; i < 12; ++i) {
    rows[i] = {-1.0f, 0.5f, 0.75f};
    labels[i] = 1;
  }
  // Forget set and retain set hold byte-identical copies of the same two
  // samples, so FIM_f == FIM_r exactly.
  const auto ds = flat_dataset(rows, labels, 2);
  ModelState model;
  model.arch = make_logistic(Shape3{3, 1, 1}, 2);
  model.params = init_params(model.arch, 31);

  ScenarioPlan plan;
  plan.kind = ScenarioKind::kAllClasses;
  plan.forget_indices = {0, 6};
  plan.retain_indices = {1, 2, 3, 4, 5, 7, 8, 9, 10, 11};
  plan.budget = 2;

  UnlearnContext ctx;
  ctx.original = &model;
  ctx.dataset = &ds;
  ctx.plan = &plan;
  ctx.sub_retain_fraction = 1.0;
  ctx.method_params["alpha"] = 10.0;
  ctx.method_params["lambda"] = 1.0;

  const auto res = ssd_unlearn(ctx);
  CHECK(bitwise_equal(res.model.params, model.params));
  CHECK(res.diagnostics.at("dampened_params") == 0.0);
}

TEST_CASE("salun mask size and membership match a sort oracle") {
  const auto ds = make_gaussian_mixture(3, 8, 4, 2.0, 1.0, 41, Split::kTrain);
  ModelState model;
  model.arch = make_logistic(Shape3{4, 1, 1}, 3);
  model.params = init_params(model.arch, 6);
  const auto forget = select_one_class(ds, 2, 5, 1).forget_indices;
  const std::size_t np = model.arch.param_count();

  // fraction 1: everything selected.
  const auto full = salun_mask(model, ds, forget, 1.0);
  CHECK(std::accumulate(full.begin(), full.end(), 0u) == np);

  for (double fraction : {0.1, 0.25, 0.5, 0.7}) {
    const auto mask = salun_mask(model, ds, forget, fraction);
    const auto want = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(np)));
    CHECK(std::accumulate(mask.begin(), mask.end(), 0u) == want);
  }

  // Membership check against an explicit magnitude sort of the forget-set
  // gradient (recomputed through the public gradient API).
  const auto batch = make_batch(ds, forget);
  std::vector<float> g;
  ce_batch_gradient(model.arch, model.params, batch, g);
  std::vector<std::size_t> order(np);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return std::abs(g[a]) != std::abs(g[b]) ? std::abs(g[a]) > std::abs(g[b])
                                            : a < b;
  });
  const auto mask = salun_mask(model, ds, forget, 0.4);
  const auto want =
      static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(np)));
  for (std::size_t k = 0; k < np; ++k)
    CHECK(static_cast<bool>(mask[order[k]]) == (k < want));

  CHECK_THROWS_AS(salun_mask(model, ds, forget, 1.5), Error);
}

TEST_CASE("amnesiac subtraction equals the sum of the unrecorded updates") {
  const auto ds = make_gaussian_mixture(2, 16, 4, 2.5, 1.0, 51, Split::kTrain);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;  // 32 samples -> exactly two batches
  cfg.lr = 0.05;
  cfg.momentum = 0.0;
  cfg.nesterov = false;
  cfg.schedule = LrSchedule::kConstant;
  cfg.weight_decay = 0.0;
  cfg.seed = 13;

  AmnesiacLog log;
  TrainOptions opts;
  opts.hooks = amnesiac_record(log);
  const auto arch = make_logistic(Shape3{4, 1, 1}, 2);
  const auto model = train(ds, arch, cfg, opts);
  REQUIRE(log.batch_indices.size() == 2);

  // Forget a sample that sits in exactly one of the two recorded batches.
  const std::uint32_t victim = log.batch_indices[0][0];
  ScenarioPlan plan;
  plan.kind = ScenarioKind::kAllClasses;
  plan.forget_indices = {victim};
  for (std::uint32_t i = 0; i < ds.size(); ++i)
    if (i != victim) plan.retain_indices.push_back(i);
  plan.budget = 1;

  UnlearnContext ctx;
  ctx.original = &model;
  ctx.dataset = &ds;
  ctx.plan = &plan;
  ctx.train_config = cfg;
  ctx.method_params["epochs"] = 0.0;  // no recovery fine-tune

  const auto res = amnesiac_unlearn(ctx, log);
  CHECK(res.diagnostics.at("batches_removed") == 1.0);

  // theta_T - delta_0 must equal theta_init + delta_1: the parameters after
  // only the unrecorded batch's contribution.
  const auto init = init_params(arch, cfg.seed);
  for (std::size_t j = 0; j < init.size(); ++j) {
    const double expect =
        static_cast<double>(init[j]) + log.batch_deltas[1][j];
    CHECK(std::abs(res.model.params[j] - expect) < 1e-5);
  }

  // No forget batches: parameters unchanged before fine-tuning.
  ScenarioPlan keep = plan;
  keep.forget_indices.clear();
  keep.retain_indices = ds.all_indices();
  ctx.plan = &keep;
  const auto noop = amnesiac_unlearn(ctx, log);
  CHECK(bitwise_equal(noop.model.params, model.params));

  // Round trip the log container.
  const auto path = fs::temp_directory_path() / "ulbench_test_amnesiac.bin";
  log.save(path);
  const auto back = AmnesiacLog::load(path);
  CHECK(back.batch_indices == log.batch_indices);
  CHECK(back.batch_deltas == log.batch_deltas);
  fs::remove(path);
}

TEST_CASE("boundary expand preserves the external class arity") {
  Fixture f;
  auto spec = make_method_spec("boundary_expand");
  spec.hyperparams["epochs"] = 1.0;
  const auto res = unlearn(spec, f.ctx);
  CHECK(res.model.arch == f.model.arch);
  CHECK(res.model.params.size() == f.model.params.size());

  // The widened head holds one extra logit before it is stripped again.
  const auto wide = widen_output(f.model.arch, 1);
  CHECK(wide.num_classes == f.model.arch.num_classes + 1);
  CHECK(wide.param_count() ==
        f.model.arch.param_count() + f.model.arch.layers.back().in_dim + 1);
}

TEST_CASE("every registered method yields a usable model") {
  Fixture f(ScenarioKind::kClassWise, 8);
  f.ctx.artifact_store.clear();
  for (const auto& id : registered_method_ids()) {
    auto spec = make_method_spec(id);
    // Shrink the iterative methods so the sweep stays fast; hyperparameter
    // names come from each method's registered defaults.
    for (const char* knob : {"epochs", "ft_epochs", "layer_epochs",
                             "impair_epochs", "repair_epochs", "steps"})
      if (spec.hyperparams.count(knob)) spec.hyperparams[knob] = 1.0;
    if (spec.hyperparams.count("noise_steps")) spec.hyperparams["noise_steps"] = 3.0;
    if (spec.hyperparams.count("per_class")) spec.hyperparams["per_class"] = 2.0;
    if (spec.hyperparams.count("max_iters")) spec.hyperparams["max_iters"] = 20.0;

    INFO("method ", id);
    const auto res = unlearn(spec, f.ctx);
    CHECK(res.method_id == id);
    CHECK(res.model.arch == f.model.arch);
    CHECK(res.model.params.size() == f.model.params.size());
    for (float v : res.model.params) CHECK(std::isfinite(v));
    CHECK(res.wall_seconds >= 0.0);
    // The contract demands a working classifier, not garbage parameters.
    CHECK(evaluate(res.model, f.ds) >= 0.0);
  }
}

// Shard/slice training, isolation on unlearning, and vote aggregation.

#include <doctest.h>

#include <algorithm>
#include <map>

#include "helpers.hpp"
#include "ulbench/sisa.hpp"

using namespace ulbench;
using namespace ulbench::testutil;

namespace {

SisaConfig quick_config(int shards, int slices, int epochs) {
  SisaConfig cfg;
  cfg.shards = shards;
  cfg.slices = slices;
  cfg.seed = 6;
  cfg.train.epochs = epochs;
  cfg.train.batch_size = 16;
  cfg.train.lr = 0.05;
  cfg.train.seed = 6;
  return cfg;
}

}  // namespace

TEST_CASE("sisa training covers the dataset in disjoint shards") {
  const auto ds = make_gaussian_mixture(3, 30, 5, 3.0, 1.0, 44, Split::kTrain);
  const auto arch = make_mlp(Shape3{5, 1, 1}, 8, 3);
  const auto ens = sisa_train(ds, arch, quick_config(5, 1, 4));
  REQUIRE(ens.members.size() == 5);

  std::map<std::uint32_t, int> owner;
  for (const auto& m : ens.members) {
    REQUIRE(m.slices.size() == 1);
    REQUIRE(m.checkpoints.size() == 1);
    CHECK(m.checkpoints.back() == m.model.params);
    for (auto i : m.slices[0]) {
      CHECK(owner.insert({i, 1}).second);  // no index in two shards
    }
  }
  CHECK(owner.size() == ds.size());
}

TEST_CASE("forgetting one sample retrains exactly one shard") {
  const auto ds = make_gaussian_mixture(3, 30, 5, 3.0, 1.0, 44, Split::kTrain);
  const auto arch = make_mlp(Shape3{5, 1, 1}, 8, 3);
  const auto ens = sisa_train(ds, arch, quick_config(5, 1, 4));

  const std::uint32_t victim = ens.members[2].slices[0][3];
  std::vector<int> retrained;
  const auto after = sisa_unlearn(ens, ds, {victim}, &retrained);
  CHECK(retrained == std::vector<int>{2});

  for (int s = 0; s < 5; ++s) {
    if (s == 2) {
      // The affected shard no longer contains the sample.
      for (auto i : after.members[s].slices[0]) CHECK(i != victim);
    } else {
      CHECK(bitwise_equal(after.members[s].model.params,
                          ens.members[s].model.params));
      CHECK(after.members[s].slices == ens.members[s].slices);
    }
  }
}

TEST_CASE("slice checkpoints let unlearning resume mid-shard") {
  const auto ds = make_gaussian_mixture(3, 30, 5, 3.0, 1.0, 45, Split::kTrain);
  const auto arch = make_mlp(Shape3{5, 1, 1}, 8, 3);
  const auto ens = sisa_train(ds, arch, quick_config(3, 3, 6));

  for (const auto& m : ens.members) {
    REQUIRE(m.slices.size() == 3);
    REQUIRE(m.checkpoints.size() == 3);
    CHECK(m.checkpoints.back() == m.model.params);
  }

  // Forget a sample from the final slice of shard 0: the retrained shard must
  // keep its first two checkpoints untouched.
  REQUIRE(!ens.members[0].slices[2].empty());
  const std::uint32_t victim = ens.members[0].slices[2][0];
  const auto after = sisa_unlearn(ens, ds, {victim});
  CHECK(after.members[0].checkpoints[0] == ens.members[0].checkpoints[0]);
  CHECK(after.members[0].checkpoints[1] == ens.members[0].checkpoints[1]);
  CHECK(after.members[0].checkpoints[2] != ens.members[0].checkpoints[2]);

  // Unknown index: nothing to forget anywhere.
  CHECK_THROWS_AS(sisa_unlearn(ens, ds, {static_cast<std::uint32_t>(ds.size())}),
                  Error);
}

TEST_CASE("majority vote matches a brute-force count, ties to lowest class") {
  CHECK(majority_vote({1, 1, 2}, 3) == 1);
  CHECK(majority_vote({2, 1, 1, 2}, 3) == 1);     // tie 1 vs 2
  CHECK(majority_vote({4, 0, 4, 0, 2}, 5) == 0);  // tie 0 vs 4
  CHECK_THROWS_AS(majority_vote({}, 3), Error);
  CHECK_THROWS_AS(majority_vote({3}, 3), Error);  // out of range

  Rng rng(71);
  for (int t = 0; t < 200; ++t) {
    const int C = 2 + static_cast<int>(rng.uniform_index(9));
    std::vector<int> votes(1 + rng.uniform_index(9));
    for (auto& v : votes) v = static_cast<int>(rng.uniform_index(C));
    std::vector<int> count(C, 0);
    for (int v : votes) ++count[v];
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (count[c] > count[best]) best = c;
    CHECK(majority_vote(votes, C) == best);
  }
}

TEST_CASE("ensemble prediction aggregates member outputs") {
  const auto ds = make_gaussian_mixture(3, 30, 5, 3.0, 1.0, 46, Split::kTrain);
  const auto arch = make_mlp(Shape3{5, 1, 1}, 8, 3);
  const auto ens = sisa_train(ds, arch, quick_config(3, 1, 8));

  // Well separated mixture: the ensemble should classify its own shards.
  CHECK(sisa_evaluate(ens, ds) >= 90.0);

  // Mean probability is the average of the member probability vectors.
  const auto p = sisa_mean_proba(ens, ds.input(0));
  std::vector<double> manual(3, 0.0);
  for (const auto& m : ens.members) {
    const auto mp = predict_proba(m.model, ds.input(0));
    for (int c = 0; c < 3; ++c) manual[c] += mp[c] / 3.0;
  }
  for (int c = 0; c < 3; ++c)
    CHECK(p[c] == doctest::Approx(manual[c]).epsilon(1e-5));

  // Config validation: epochs must cover every slice.
  SisaConfig bad = quick_config(2, 5, 4);
  CHECK_THROWS_AS(bad.validate(), Error);
}

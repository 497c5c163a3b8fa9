// Poisoning generators and attack-success measurement.

#include <doctest.h>

#include <cstring>
#include <map>

#include "helpers.hpp"
#include "ulbench/attacks.hpp"

using namespace ulbench;
using namespace ulbench::testutil;

namespace {

LabeledDataset image_ds(int classes = 10, int per_class = 20,
                        std::uint64_t seed = 1) {
  SyntheticImageSpec spec;
  spec.num_classes = classes;
  spec.per_class = per_class;
  spec.shape = Shape3{3, 8, 8};
  spec.seed = seed;
  return make_synthetic_images(spec, Split::kTrain);
}

int partner(const std::vector<std::pair<int, int>>& pairs, int cls) {
  for (auto [a, b] : pairs) {
    if (a == cls) return b;
    if (b == cls) return a;
  }
  return cls;
}

}  // namespace

TEST_CASE("mirror flip pairing covers all classes") {
  const auto pairs = mirror_flip_pairs(10);
  REQUIRE(pairs.size() == 5);
  CHECK(pairs[0] == std::pair<int, int>{0, 9});
  CHECK(pairs[1] == std::pair<int, int>{1, 8});
  CHECK(pairs[2] == std::pair<int, int>{2, 7});
  CHECK(pairs[3] == std::pair<int, int>{3, 6});
  CHECK(pairs[4] == std::pair<int, int>{4, 5});
  CHECK_THROWS_AS(mirror_flip_pairs(5), Error);  // odd class count
}

TEST_CASE("label flip: stratified counts, involutive mapping, inputs untouched") {
  const auto ds = image_ds();
  PoisonSpec spec;
  spec.kind = PoisonKind::kLabelFlip;
  spec.budget = 50;
  spec.flip_pairs = mirror_flip_pairs(10);
  spec.seed = 4;

  auto [poisoned, indices] = apply_label_flip(ds, spec);
  CHECK(indices.size() == 50);

  // 5 flips per class, each flipped to its partner class.
  std::map<int, int> per_class;
  for (auto i : indices) {
    ++per_class[ds.label(i)];
    CHECK(poisoned.label(i) == partner(spec.flip_pairs, ds.label(i)));
    // The mapping is an involution: applying it twice restores the label.
    CHECK(partner(spec.flip_pairs, poisoned.label(i)) == ds.label(i));
    CHECK(std::memcmp(poisoned.input(i), ds.input(i),
                      ds.shape().size() * sizeof(float)) == 0);
  }
  for (int c = 0; c < 10; ++c) CHECK(per_class[c] == 5);

  // Non-selected samples are bitwise unchanged.
  std::vector<bool> hit(ds.size(), false);
  for (auto i : indices) hit[i] = true;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (hit[i]) continue;
    CHECK(poisoned.label(i) == ds.label(i));
    CHECK(std::memcmp(poisoned.input(i), ds.input(i),
                      ds.shape().size() * sizeof(float)) == 0);
  }

  PoisonSpec none = spec;
  none.budget = 0;
  auto [same, no_idx] = apply_label_flip(ds, none);
  CHECK(no_idx.empty());
  CHECK(same.fingerprint() == ds.fingerprint());

  // A class without a partner is rejected.
  PoisonSpec bad = spec;
  bad.flip_pairs = {{0, 9}};
  CHECK_THROWS_AS(apply_label_flip(ds, bad), Error);
}

TEST_CASE("backdoor trigger lands on exact pixel coordinates") {
  const auto ds = image_ds(4, 5, 9);
  PoisonSpec spec;
  spec.kind = PoisonKind::kBackdoor;
  spec.budget = 6;
  spec.trigger_size = 3;
  spec.trigger_location = Corner::kBottomRight;
  spec.trigger_value = 1.0f;
  spec.target_class = 0;
  spec.seed = 8;

  auto [poisoned, indices] = apply_backdoor(ds, spec);
  CHECK(indices.size() == 6);
  const Shape3 s = ds.shape();
  for (auto i : indices) {
    CHECK(poisoned.label(i) == 0);
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          const std::size_t off =
              (static_cast<std::size_t>(c) * s.h + y) * s.w + x;
          const bool in_patch = y >= s.h - 3 && x >= s.w - 3;
          if (in_patch)
            CHECK(poisoned.input(i)[off] == 1.0f);
          else
            CHECK(poisoned.input(i)[off] == ds.input(i)[off]);
        }
      }
    }
  }

  // Stamping an already-stamped input changes nothing.
  std::vector<float> once(poisoned.input(indices[0]),
                          poisoned.input(indices[0]) + s.size());
  std::vector<float> twice = once;
  stamp_trigger(s, twice.data(), spec);
  CHECK(once == twice);

  // Other corners place the patch at their own coordinates.
  std::vector<float> img(s.size(), 0.25f);
  PoisonSpec tl = spec;
  tl.trigger_location = Corner::kTopLeft;
  stamp_trigger(s, img.data(), tl);
  CHECK(img[0] == 1.0f);                    // (0,0) painted
  CHECK(img[3] == 0.25f);                   // (0,3) untouched
  CHECK(img[s.size() - 1] == 0.25f);        // bottom-right untouched

  PoisonSpec huge = spec;
  huge.trigger_size = 9;  // larger than the 8x8 image
  CHECK_THROWS_AS(apply_backdoor(ds, huge), Error);

  PoisonSpec none = spec;
  none.budget = 0;
  auto [same, no_idx] = apply_backdoor(ds, none);
  CHECK(no_idx.empty());
  CHECK(same.fingerprint() == ds.fingerprint());
}

TEST_CASE("attack success rate: analytic and hand-counted cases") {
  PoisonSpec spec;
  spec.kind = PoisonKind::kBackdoor;
  spec.trigger_size = 1;  // the flat one-hot inputs have 1x1 spatial extent
  spec.target_class = 0;

  // A model that always answers the target class has ASR 100.
  const auto test_ds = onehot_dataset(4, 3, Split::kTest);
  const auto constant = zero_logistic(4, 4);
  CHECK(attack_success_rate(constant, test_ds, spec) ==
        doctest::Approx(100.0));

  // Hand count on a 1x2x2 image with a 1-pixel bottom-right trigger. The
  // model fires class 0 when the trigger pixel is lit (weight 50) and class 1
  // proportional to pixel 0 (weight 30). After triggering:
  //   sample A (pixel0 = 1, label 1): logits (50, 30) -> class 0, hit
  //   sample B (pixel0 = 2, label 1): logits (50, 60) -> class 1, miss
  //   sample C (label 0): excluded from the denominator
  // so the exclusive ASR is 1/2 = 50.
  LabeledDataset tiny("tiny", Shape3{1, 2, 2}, 2, Split::kTest,
                      {1.0f, 0.0f, 0.0f, 0.0f,  //
                       2.0f, 0.0f, 0.0f, 0.0f,  //
                       0.0f, 0.0f, 0.0f, 0.0f},
                      {1, 1, 0});
  ModelState keyed = zero_logistic(4, 2);
  keyed.arch = make_logistic(Shape3{1, 2, 2}, 2);
  keyed.params.assign(keyed.arch.param_count(), 0.0f);
  keyed.params[3] = 50.0f;  // class-0 weight on the trigger pixel
  keyed.params[4] = 30.0f;  // class-1 weight on pixel 0
  PoisonSpec one_px = spec;
  one_px.trigger_size = 1;
  CHECK(attack_success_rate(keyed, tiny, one_px) == doctest::Approx(50.0));
  // Inclusive convention counts sample C too: 2 of 3 hit.
  CHECK(attack_success_rate(keyed, tiny, one_px, false) ==
        doctest::Approx(100.0 * 2.0 / 3.0));

  // Exclusive vs inclusive denominators differ when target-class samples
  // are present.
  const double excl = attack_success_rate(constant, test_ds, spec, true);
  const double incl = attack_success_rate(constant, test_ds, spec, false);
  CHECK(excl == doctest::Approx(100.0));
  CHECK(incl == doctest::Approx(100.0));  // constant model hits everything

  PoisonSpec flip;
  flip.kind = PoisonKind::kLabelFlip;
  CHECK_THROWS_AS(attack_success_rate(constant, test_ds, flip), Error);
}

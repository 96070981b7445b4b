// tests/test_synthdata.cc

// Copyright 2026  The subemb authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "subemb/synthdata.h"
#include "test_util.h"

using namespace subemb;

namespace {

VariationSample UnitSample(int dim, int n_variations, uint64_t seed) {
  RngStream rng(seed, "unit-sample");
  VariationSample s;
  s.u.assign(n_variations, 1);
  s.x.resize(dim);
  for (double &v : s.x) v = rng.Normal();
  s.x = L2Normalize(s.x);
  return s;
}

std::string Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("identity prototypes are unit rows, deterministic, near-orthogonal") {
  const Mat a = GenIdentities(20, 64, RngStream(1, "ids"));
  const Mat b = GenIdentities(20, 64, RngStream(1, "ids"));
  CHECK(a.Data() == b.Data());
  for (int i = 0; i < 20; ++i)
    CHECK(std::fabs(Norm(a.Row(i)) - 1.0) < 1e-12);

  // Monte-Carlo: mean |cos| between random unit vectors in R^64 is about
  // sqrt(2 / (pi * 64)) ~= 0.0997.
  const Mat big = GenIdentities(200, 64, RngStream(2, "ids"));
  double acc = 0.0;
  int count = 0;
  for (int i = 0; i < 200; ++i)
    for (int j = i + 1; j < 200; ++j) {
      acc += std::fabs(Dot(big.Row(i), big.Row(j)));
      ++count;
    }
  const double mean_abs_cos = acc / count;
  const double expected = std::sqrt(2.0 / (M_PI * 64.0));
  CHECK(mean_abs_cos > 0.7 * expected);
  CHECK(mean_abs_cos < 1.3 * expected);
}

TEST_CASE("clean samples stay close to their prototype") {
  const Mat protos = GenIdentities(1, 64, RngStream(3, "ids"));
  // Zero noise reproduces the prototype exactly.
  const VariationSample exact =
      SampleClean(protos.Row(0), 0.0, 6, RngStream(4, "s"));
  for (int d = 0; d < 64; ++d)
    CHECK(exact.x[d] == doctest::Approx(protos(0, d)).epsilon(1e-12));
  for (int u : exact.u) CHECK(u == 1);

  RngStream rng(5, "noise");
  double mean_cos = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const VariationSample s =
        SampleClean(protos.Row(0), 0.1, 6, rng.Derive(i));
    mean_cos += Dot(s.x, protos.Row(0)) / 1000.0;
  }
  CHECK(mean_cos > 0.99);
}

TEST_CASE("zero-strength corruptions are exact no-ops") {
  const VariationSample original = UnitSample(63, 6, 7);

  VariationSample s = original;
  CorruptBlur(&s, 0);
  CHECK(s.x == original.x);
  CHECK(s.u == original.u);

  RngStream rng(8, "occ");
  s = original;
  CorruptOcclude(&s, 0.0, 1, &rng);
  CHECK(s.x == original.x);
  CHECK(s.u == original.u);

  const RotationPlane plane = MakeRotationPlane(63, RngStream(9, "plane"));
  s = original;
  CorruptPose(&s, 0.0, plane);
  CHECK(s.x == original.x);
  CHECK(s.u == original.u);
}

TEST_CASE("occlusion zeroes a contiguous block sized by the fraction") {
  // fraction 1/7 of 63 coordinates = exactly 9 zeroed before renormalizing.
  VariationSample s = UnitSample(63, 6, 10);
  // Make all coordinates nonzero so zeroed entries are identifiable.
  for (double &v : s.x) v = std::fabs(v) + 0.01;
  s.x = L2Normalize(s.x);
  RngStream rng(11, "occ");
  CorruptOcclude(&s, 1.0 / 7.0, 1, &rng);
  int zeros = 0;
  for (double v : s.x)
    if (v == 0.0) ++zeros;
  CHECK(zeros == 9);
  CHECK(std::fabs(Norm(s.x) - 1.0) < 1e-12);
  CHECK(s.u[kOccludeVariation] == 0);

  VariationSample t = UnitSample(63, 6, 12);
  RngStream rng2(13, "occ");
  CHECK_THROWS_AS(CorruptOcclude(&t, 1.0, 1, &rng2), ConfigError);
}

TEST_CASE("pose rotation matches an explicit two-plane rotation") {
  const int dim = 16;
  const RotationPlane plane = MakeRotationPlane(dim, RngStream(14, "plane"));
  CHECK(std::fabs(Norm(plane.e1) - 1.0) < 1e-12);
  CHECK(std::fabs(Norm(plane.e2) - 1.0) < 1e-12);
  CHECK(std::fabs(Dot(plane.e1, plane.e2)) < 1e-12);

  const double theta = 50.0 * M_PI / 180.0;
  VariationSample s = UnitSample(dim, 6, 15);
  const Vec x0 = s.x;
  CorruptPose(&s, theta, plane);

  // Explicit rotation: R = I + (cos t - 1)(e1 e1^T + e2 e2^T)
  //                      + sin t (e2 e1^T - e1 e2^T).
  Vec expect = x0;
  const double c1 = Dot(x0, plane.e1), c2 = Dot(x0, plane.e2);
  Axpy((std::cos(theta) - 1.0) * c1 - std::sin(theta) * c2, plane.e1, expect);
  Axpy(std::sin(theta) * c1 + (std::cos(theta) - 1.0) * c2, plane.e2, expect);
  expect = L2Normalize(expect);
  for (int d = 0; d < dim; ++d)
    CHECK(s.x[d] == doctest::Approx(expect[d]).epsilon(1e-10));

  // Components outside the plane are untouched (before renormalization the
  // rotation is exactly orthogonal, so norms survive to 1e-12).
  CHECK(std::fabs(Norm(s.x) - 1.0) < 1e-12);
  CHECK(s.u[kPoseVariation] == 0);
}

TEST_CASE("every corruption renormalizes and degrades prototype similarity") {
  const Mat protos = GenIdentities(1, 64, RngStream(16, "ids"));
  const RotationPlane plane = MakeRotationPlane(64, RngStream(17, "plane"));
  RngStream rng(18, "mc");

  double cos_blur = 0.0, cos_occ = 0.0, cos_pose = 0.0, cos_clean = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    RngStream r = rng.Derive(i);
    const VariationSample clean =
        SampleClean(protos.Row(0), 0.1, 6, r.Derive("noise"));
    cos_clean += Dot(clean.x, protos.Row(0)) / n;

    VariationSample b = clean;
    CorruptBlur(&b, 3);
    CHECK(std::fabs(Norm(b.x) - 1.0) < 1e-12);
    cos_blur += Dot(b.x, protos.Row(0)) / n;

    VariationSample o = clean;
    RngStream orng = r.Derive("occ");
    CorruptOcclude(&o, 2.0 / 7.0, 1, &orng);
    CHECK(std::fabs(Norm(o.x) - 1.0) < 1e-12);
    cos_occ += Dot(o.x, protos.Row(0)) / n;

    VariationSample p = clean;
    CorruptPose(&p, 50.0 * M_PI / 180.0, plane);
    CHECK(std::fabs(Norm(p.x) - 1.0) < 1e-12);
    cos_pose += Dot(p.x, protos.Row(0)) / n;
  }
  CHECK(cos_blur < cos_clean);
  CHECK(cos_occ < cos_clean);
  CHECK(cos_pose < cos_clean);
}

TEST_CASE("augmentation applies each family at the configured rate") {
  const CorruptionRanges ranges;
  const RotationPlane plane = MakeRotationPlane(64, RngStream(19, "plane"));
  RngStream rng(20, "aug");

  SUBCASE("probability zero is the identity") {
    const VariationSample original = UnitSample(64, 6, 21);
    VariationSample s = original;
    Augment(&s, ranges, 0.0, plane, rng.Derive("p0"));
    CHECK(s.x == original.x);
    CHECK(s.u == original.u);
  }

  SUBCASE("probability one applies everything") {
    VariationSample s = UnitSample(64, 6, 22);
    Augment(&s, ranges, 1.0, plane, rng.Derive("p1"));
    CHECK(s.u[kBlurVariation] == 0);
    CHECK(s.u[kOccludeVariation] == 0);
    CHECK(s.u[kPoseVariation] == 0);
  }

  SUBCASE("probability 0.3 lands near 0.3 per family") {
    int blurred = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      VariationSample s = UnitSample(64, 6, 23);
      Augment(&s, ranges, 0.3, plane, rng.Derive(i));
      if (s.u[kBlurVariation] == 0) ++blurred;
    }
    const double rate = static_cast<double>(blurred) / n;
    CHECK(rate > 0.28);
    CHECK(rate < 0.32);
  }

  SUBCASE("label bookkeeping marks exactly the applied corruptions") {
    for (int i = 0; i < 200; ++i) {
      VariationSample s = UnitSample(64, 6, 24);
      const Vec before = s.x;
      Augment(&s, ranges, 0.5, plane, rng.Derive(1000 + i));
      const bool any_applied = s.u[0] == 0 || s.u[1] == 0 || s.u[2] == 0;
      CHECK(any_applied == (s.x != before));
      // Attribute labels are never touched by augmentation.
      for (int t = kAugmentableVariations; t < 6; ++t) CHECK(s.u[t] == 1);
    }
  }
}

TEST_CASE("multiple occlusion blocks zero more coordinates") {
  VariationSample s = UnitSample(64, 6, 31);
  for (double &v : s.x) v = std::fabs(v) + 0.01;
  s.x = L2Normalize(s.x);
  RngStream rng(32, "occ");
  CorruptOcclude(&s, 1.0 / 8.0, 3, &rng);
  int zeros = 0;
  for (double v : s.x)
    if (v == 0.0) ++zeros;
  // Three blocks of 8; overlaps allowed, so between 8 and 24.
  CHECK(zeros >= 8);
  CHECK(zeros <= 24);
  CHECK(s.u[kOccludeVariation] == 0);
}

TEST_CASE("disabled families are never applied") {
  const CorruptionRanges ranges;
  const RotationPlane plane = MakeRotationPlane(64, RngStream(33, "plane"));
  RngStream rng(34, "fam");
  for (int i = 0; i < 300; ++i) {
    VariationSample s = UnitSample(64, 6, 35);
    Augment(&s, ranges, 1.0, plane, rng.Derive(i), {false, true, false});
    CHECK(s.u[kBlurVariation] == 1);
    CHECK(s.u[kOccludeVariation] == 0);
    CHECK(s.u[kPoseVariation] == 1);
  }
}

TEST_CASE("mined attribute labels are identity-level and balanced") {
  const Mat functionals = MakeAttributeFunctionals(3, 64, RngStream(25, "fn"));
  const Mat protos = GenIdentities(1000, 64, RngStream(26, "ids"));

  Vec rates(3, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<int> once = MineAttributeLabels(protos.Row(i), functionals);
    const std::vector<int> twice =
        MineAttributeLabels(protos.Row(i), functionals);
    CHECK(once == twice);
    for (int t = 0; t < 3; ++t) rates[t] += once[t] / 1000.0;
  }
  for (double r : rates) {
    CHECK(r > 0.4);
    CHECK(r < 0.6);
  }
}

TEST_CASE("dataset splits use disjoint identities and deterministic bytes") {
  DatasetConfig cfg;
  cfg.n_train_identities = 5;
  cfg.n_test_identities = 3;
  cfg.samples_per_identity = 4;
  cfg.observation_dim = 16;
  cfg.seed = 99;

  const Dataset ds = MakeDataset(cfg);
  CHECK(ds.train.size() == 20);
  CHECK(ds.test.size() == 12);

  // Identity indices are split-local; the generating prototypes are drawn
  // from disjoint streams. Verify the actual observations do not collide.
  for (const VariationSample &tr : ds.train)
    for (const VariationSample &te : ds.test) CHECK(tr.x != te.x);

  // Same config, same bytes.
  test::TempDir dir_a("ds-a"), dir_b("ds-b");
  SaveDataset(ds, dir_a.Path());
  SaveDataset(MakeDataset(cfg), dir_b.Path());
  for (const char *name : {"dataset.json", "train.csv", "test.csv"})
    CHECK(Slurp(dir_a.File(name)) == Slurp(dir_b.File(name)));

  // Train rows are stored clean on the augmentable axes.
  for (const VariationSample &tr : ds.train)
    for (int t = 0; t < kAugmentableVariations; ++t) CHECK(tr.u[t] == 1);

  // Test rows carry baked-in corruption at roughly the configured rate.
  int corrupted = 0;
  for (const VariationSample &te : ds.test)
    if (te.u[0] == 0 || te.u[1] == 0 || te.u[2] == 0) ++corrupted;
  CHECK(corrupted > 0);
}

TEST_CASE("csv and binary loaders round-trip the dataset") {
  DatasetConfig cfg;
  cfg.n_train_identities = 3;
  cfg.n_test_identities = 2;
  cfg.samples_per_identity = 5;
  cfg.observation_dim = 8;
  cfg.seed = 5;

  for (const char *format : {"csv", "binary"}) {
    cfg.format = format;
    const Dataset ds = MakeDataset(cfg);
    test::TempDir dir(std::string("ds-roundtrip-") + format);
    SaveDataset(ds, dir.Path());
    const Dataset loaded = LoadDataset(dir.Path());

    REQUIRE(loaded.train.size() == ds.train.size());
    REQUIRE(loaded.test.size() == ds.test.size());
    for (size_t i = 0; i < ds.train.size(); ++i) {
      CHECK(loaded.train[i].identity == ds.train[i].identity);
      CHECK(loaded.train[i].u == ds.train[i].u);
      CHECK(loaded.train[i].x == ds.train[i].x);  // %.17g / raw: bit-exact
    }
    CHECK(loaded.plane.e1 == ds.plane.e1);
    CHECK(loaded.plane.e2 == ds.plane.e2);
  }
}

TEST_CASE("loading a missing or malformed dataset fails cleanly") {
  test::TempDir dir("ds-bad");
  CHECK_THROWS_AS(LoadDataset(dir.Path()), ConfigError);
  {
    std::ofstream out(dir.File("dataset.json"));
    out << "{ not json";
  }
  CHECK_THROWS_AS(LoadDataset(dir.Path()), ConfigError);
}

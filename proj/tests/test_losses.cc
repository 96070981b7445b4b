// tests/test_losses.cc

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

#include "doctest.h"
#include "oracles.h"
#include "subemb/losses.h"
#include "test_util.h"

using namespace subemb;

namespace {

// Two-identity single-group toy: f = [1,0], w1 = [1,0], w2 = [0,1], s = 2.
struct Toy {
  ProbEmbedding e;
  PrototypeBank bank;
};

Toy MakeToy() {
  Toy t;
  t.e = test::MakeEmbedding({{1.0, 0.0}}, {2.0});
  t.bank = test::MakeBank({{1.0, 0.0}, {0.0, 1.0}}, 1);
  return t;
}

}  // namespace

TEST_CASE("posterior of the single-group toy") {
  const Toy t = MakeToy();
  const Vec p = Posterior(t.e, t.bank);
  // exp(2) / (exp(2) + exp(0))
  CHECK(p[0] == doctest::Approx(0.8807970779778823).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.1192029220221177).epsilon(1e-12));
}

TEST_CASE("posterior is uniform for an equidistant embedding") {
  // Two orthogonal prototypes; f at 45 degrees is equidistant.
  const double r = 1.0 / std::sqrt(2.0);
  const ProbEmbedding e = test::MakeEmbedding({{r, r}}, {3.0});
  const PrototypeBank bank = test::MakeBank({{1.0, 0.0}, {0.0, 1.0}}, 1);
  const Vec p = Posterior(e, bank);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("confidence scaling preserves the argmax class") {
  RngStream rng(17, "argmax");
  for (int trial = 0; trial < 300; ++trial) {
    RngStream r = rng.Derive(trial);
    const int K = r.UniformInt(1, 4);
    const int gd = r.UniformInt(2, 4);
    const int n = r.UniformInt(2, 5);
    ProbEmbedding e = test::RandomEmbedding(K, gd, r.Derive("emb"));
    const PrototypeBank bank =
        InitPrototypeBank(n, K, gd, r.Derive("bank"));

    const Vec p1 = Posterior(e, bank);
    // Scale all confidences by a shared positive constant.
    const double c = r.Uniform(0.5, 3.0);
    for (double &s : e.confidences) s *= c;
    const Vec p2 = Posterior(e, bank);

    const auto argmax = [](const Vec &p) {
      return std::max_element(p.begin(), p.end()) - p.begin();
    };
    CHECK(argmax(p1) == argmax(p2));
  }
}

TEST_CASE("posterior sums to one and matches the naive oracle") {
  RngStream rng(23, "norm");
  for (int trial = 0; trial < 10000; ++trial) {
    RngStream r = rng.Derive(trial);
    const int K = r.UniformInt(1, 4);
    const int gd = r.UniformInt(2, 4);
    const int n = r.UniformInt(2, 8);
    const ProbEmbedding e =
        test::RandomEmbedding(K, gd, r.Derive("emb"), 0.5, 12.0);
    const PrototypeBank bank = InitPrototypeBank(n, K, gd, r.Derive("bank"));

    const Vec p = Posterior(e, bank);
    double total = 0.0;
    for (double v : p) total += v;
    REQUIRE(std::fabs(total - 1.0) < 1e-12);

    const Vec naive = oracle::Posterior(e, bank);
    for (int j = 0; j < n; ++j) REQUIRE(std::fabs(p[j] - naive[j]) < 1e-10);
  }
}

TEST_CASE("identification loss with zero margin and uniform logits") {
  // Four orthogonal-ish prototypes, embedding equidistant from all: the
  // gated logits coincide, so the loss is log N.
  const double r = 0.5;
  const ProbEmbedding e =
      test::MakeEmbedding({{r, r, r, r}}, {5.0});
  const PrototypeBank bank = test::MakeBank({{1.0, 0.0, 0.0, 0.0},
                                             {0.0, 1.0, 0.0, 0.0},
                                             {0.0, 0.0, 1.0, 0.0},
                                             {0.0, 0.0, 0.0, 1.0}},
                                            1);
  const IdtResult res = IdtLoss(e, bank, 2, 0.0);
  CHECK(res.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("identification loss of the margin toy") {
  const Toy t = MakeToy();
  const IdtResult res = IdtLoss(t.e, t.bank, 0, 1.0);
  // -log(e^1 / (e^1 + e^0)) = log(1 + e^-1)
  CHECK(res.loss == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
  CHECK(res.loss == doctest::Approx(0.31326168751822286).epsilon(1e-10));
  CHECK(res.loss ==
        doctest::Approx(oracle::IdtLoss(t.e, t.bank, 0, 1.0)).epsilon(1e-12));
}

TEST_CASE("margin shifts only the true-class logit, not scaled by s") {
  // With a production-scale margin the true-class logit drops by exactly m
  // before the softmax, whatever the confidences are.
  RngStream rng(31, "margin");
  const ProbEmbedding e =
      test::RandomEmbedding(4, 4, rng.Derive("emb"), 20.0, 60.0);
  const PrototypeBank bank = InitPrototypeBank(5, 4, 4, rng.Derive("bank"));
  const double m = 30.0;
  const IdtResult res = IdtLoss(e, bank, 3, m);
  const Vec logits = ClassLogits(e, bank);
  Vec adjusted = logits;
  adjusted[3] -= m;
  const Vec expect = Softmax(adjusted);
  for (int j = 0; j < 5; ++j)
    CHECK(res.posterior[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("margin leaves the non-true conditional posterior unchanged") {
  RngStream rng(37, "margin-inv");
  for (int trial = 0; trial < 100; ++trial) {
    RngStream r = rng.Derive(trial);
    const ProbEmbedding e = test::RandomEmbedding(2, 3, r.Derive("emb"));
    const PrototypeBank bank = InitPrototypeBank(4, 2, 3, r.Derive("bank"));
    const int y = r.UniformInt(0, 3);

    const IdtResult m0 = IdtLoss(e, bank, y, 0.0);
    const IdtResult m1 = IdtLoss(e, bank, y, r.Uniform(0.1, 5.0));
    for (int j = 0; j < 4; ++j) {
      if (j == y) continue;
      const double q0 = m0.posterior[j] / (1.0 - m0.posterior[y]);
      const double q1 = m1.posterior[j] / (1.0 - m1.posterior[y]);
      CHECK(q0 == doctest::Approx(q1).epsilon(1e-9));
    }
  }
}

TEST_CASE("invalid label is rejected") {
  const Toy t = MakeToy();
  CHECK_THROWS_AS(IdtLoss(t.e, t.bank, 2, 0.0), ConfigError);
  CHECK_THROWS_AS(IdtLoss(t.e, t.bank, -1, 0.0), ConfigError);
}

TEST_CASE("closed-form gradients: perfect posterior stalls the true prototype") {
  const Toy t = MakeToy();
  const Vec p = {1.0, 0.0};
  const ClosedFormIdtGrads g = IdtGradsClosedForm(t.e, t.bank, 0, p);
  for (double v : g.grad_bank.Row(0)) CHECK(v == 0.0);
}

TEST_CASE("closed-form gradients are linear in the confidence gate") {
  RngStream rng(41, "gating");
  for (int trial = 0; trial < 50; ++trial) {
    RngStream r = rng.Derive(trial);
    const int K = r.UniformInt(1, 4);
    const int gd = r.UniformInt(2, 4);
    const int n = r.UniformInt(2, 5);
    ProbEmbedding e = test::RandomEmbedding(K, gd, r.Derive("emb"));
    const PrototypeBank bank = InitPrototypeBank(n, K, gd, r.Derive("bank"));
    const int y = r.UniformInt(0, n - 1);

    // Posterior held fixed while the confidences scale.
    const Vec p = Softmax(ClassLogits(e, bank));
    const ClosedFormIdtGrads g1 = IdtGradsClosedForm(e, bank, y, p);
    const double c = 2.0;
    for (double &s : e.confidences) s *= c;
    const ClosedFormIdtGrads g2 = IdtGradsClosedForm(e, bank, y, p);

    for (int j = 0; j < n; ++j)
      for (int d = 0; d < K * gd; ++d) {
        const double a = c * g1.grad_bank(j, d);
        const double b = g2.grad_bank(j, d);
        const double denom = std::max({std::fabs(a), std::fabs(b), 1e-30});
        REQUIRE(std::fabs(a - b) / denom < 1e-10);
      }
  }
}

TEST_CASE("closed forms equal the reverse-mode gradients") {
  RngStream rng(43, "closed");
  for (int trial = 0; trial < 200; ++trial) {
    RngStream r = rng.Derive(trial);
    const int K = r.UniformInt(1, 4);
    const int gd = r.UniformInt(2, 4);
    const int n = r.UniformInt(2, 5);
    const ProbEmbedding e = test::RandomEmbedding(K, gd, r.Derive("emb"));
    const PrototypeBank bank = InitPrototypeBank(n, K, gd, r.Derive("bank"));
    const int y = r.UniformInt(0, n - 1);
    const double m = r.Uniform(0.0, 2.0);

    const IdtResult idt = IdtLoss(e, bank, y, m);
    const ClosedFormIdtGrads closed =
        IdtGradsClosedForm(e, bank, y, idt.posterior);
    for (size_t i = 0; i < closed.grad_f.size(); ++i)
      REQUIRE(std::fabs(closed.grad_f[i] - idt.grad_f[i]) < 1e-8);
    for (size_t i = 0; i < closed.grad_bank.Data().size(); ++i)
      REQUIRE(std::fabs(closed.grad_bank.Data()[i] -
                        idt.grad_bank.Data()[i]) < 1e-8);

    // And both agree with the independently transcribed oracle.
    const oracle::IdtGrads naive = oracle::IdtGradients(e, bank, y, m);
    for (size_t i = 0; i < naive.grad_f.size(); ++i)
      REQUIRE(std::fabs(naive.grad_f[i] - idt.grad_f[i]) < 1e-10);
    for (size_t i = 0; i < naive.grad_s.size(); ++i)
      REQUIRE(std::fabs(naive.grad_s[i] - idt.grad_s[i]) < 1e-10);
  }
}

TEST_CASE("partition mismatches are rejected") {
  const Toy t = MakeToy();
  const ProbEmbedding wrong = test::MakeEmbedding({{1.0, 0.0}, {0.0, 1.0}},
                                                  {1.0, 1.0});
  CHECK_THROWS_AS(Posterior(wrong, t.bank), DimensionError);
  CHECK_THROWS_AS(IdtLoss(wrong, t.bank, 0, 0.0), DimensionError);
}

TEST_CASE("confidence regularizer examples") {
  CHECK(ConfReg(test::MakeEmbedding({{1.0, 0.0}, {0.0, 1.0}}, {2.0, 2.0})) ==
        doctest::Approx(4.0).epsilon(1e-15));
  ProbEmbedding e = test::RandomEmbedding(16, 2, RngStream(3, "e"));
  std::fill(e.confidences.begin(), e.confidences.end(), 1.0);
  CHECK(ConfReg(e) == doctest::Approx(1.0).epsilon(1e-15));
  // Limit of vanishing confidence.
  std::fill(e.confidences.begin(), e.confidences.end(), 1e-12);
  CHECK(ConfReg(e) < 1e-20);

  const Vec g = ConfRegGrad(test::MakeEmbedding({{1.0}, {0.0}}, {3.0, 5.0}));
  CHECK(g[0] == doctest::Approx(3.0).epsilon(1e-15));  // 2*3/2
  CHECK(g[1] == doctest::Approx(5.0).epsilon(1e-15));
}

namespace {

struct DiscFixture {
  ProbEmbedding e;
  MaskSet masks;
  Discriminator disc;
  std::vector<int> labels;
};

DiscFixture MakeDiscFixture(int n_variations, uint64_t seed) {
  DiscFixture f;
  RngStream rng(seed, "disc-fixture");
  const int K = 8, gd = 2;
  f.e = test::RandomEmbedding(K, gd, rng.Derive("emb"));
  f.masks = GenerateMasks(K, n_variations, rng.Derive("masks"));
  f.disc = InitDiscriminator(n_variations, K * gd, rng.Derive("disc"));
  for (double &w : f.disc.weight.Data()) w += 0.5 * rng.Normal();
  f.labels.resize(n_variations);
  for (int &u : f.labels) u = rng.UniformInt(0, 1);
  return f;
}

}  // namespace

TEST_CASE("uninformative discriminator loses (M+T)^2 log 2") {
  DiscFixture f = MakeDiscFixture(6, 11);
  f.disc.weight.SetZero();
  std::fill(f.disc.bias.begin(), f.disc.bias.end(), 0.0);
  const DiscResult res = DiscLoss(f.disc, f.e, f.masks, f.labels);
  CHECK(res.loss == doctest::Approx(36.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(res.loss ==
        doctest::Approx(oracle::DiscLoss(f.disc, f.e, f.masks, f.labels))
            .epsilon(1e-12));
}

TEST_CASE("near-perfect discriminator loses nearly nothing") {
  DiscFixture f = MakeDiscFixture(4, 13);
  // Saturate the bias toward the true labels; the loss approaches zero.
  f.disc.weight.SetZero();
  for (int t = 0; t < 4; ++t) f.disc.bias[t] = f.labels[t] == 1 ? 50.0 : -50.0;
  const DiscResult res = DiscLoss(f.disc, f.e, f.masks, f.labels);
  CHECK(res.loss < 1e-12);
  for (double g : res.grad_weight.Data()) CHECK(std::fabs(g) < 1e-12);
}

TEST_CASE("discriminator loss agrees with the naive oracle") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const DiscFixture f = MakeDiscFixture(5, 100 + seed);
    const DiscResult res = DiscLoss(f.disc, f.e, f.masks, f.labels);
    CHECK(res.loss ==
          doctest::Approx(oracle::DiscLoss(f.disc, f.e, f.masks, f.labels))
              .epsilon(1e-10));
  }
}

TEST_CASE("label length mismatch is rejected") {
  DiscFixture f = MakeDiscFixture(4, 17);
  f.labels.pop_back();
  CHECK_THROWS_AS(DiscLoss(f.disc, f.e, f.masks, f.labels), DimensionError);
  CHECK_THROWS_AS(VariationClsLoss(f.disc, f.e, f.masks, f.labels),
                  DimensionError);
}

TEST_CASE("classification loss: single variation with probability one half") {
  // One variation, one mask; zero weights put the prediction at 1/2.
  ProbEmbedding e = test::RandomEmbedding(2, 2, RngStream(19, "emb"));
  MaskSet masks = GenerateMasks(2, 1, RngStream(20, "masks"));
  Discriminator disc = InitDiscriminator(1, 4, RngStream(21, "disc"));
  disc.weight.SetZero();
  disc.bias[0] = 0.0;
  const VariationLossResult res =
      VariationClsLoss(disc, e, masks, std::vector<int>{1});
  CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("classification loss vanishes when the discriminator is certain") {
  DiscFixture f = MakeDiscFixture(3, 23);
  f.disc.weight.SetZero();
  for (int t = 0; t < 3; ++t) f.disc.bias[t] = f.labels[t] == 1 ? 60.0 : -60.0;
  const VariationLossResult res =
      VariationClsLoss(f.disc, f.e, f.masks, f.labels);
  CHECK(res.loss < 1e-12);
}

TEST_CASE("cls and adv losses agree with their oracles and fd gradients") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const DiscFixture f = MakeDiscFixture(4, 200 + seed);
    const VariationLossResult cls =
        VariationClsLoss(f.disc, f.e, f.masks, f.labels);
    const VariationLossResult adv =
        VariationAdvLoss(f.disc, f.e, f.masks, f.labels);
    CHECK(cls.loss ==
          doctest::Approx(oracle::ClsLoss(f.disc, f.e, f.masks, f.labels))
              .epsilon(1e-10));
    CHECK(adv.loss ==
          doctest::Approx(oracle::AdvLoss(f.disc, f.e, f.masks, f.labels))
              .epsilon(1e-10));

    // Gradients with respect to the (free) normalized sub-embedding values.
    for (int which = 0; which < 2; ++which) {
      const Vec &analytic = which == 0 ? cls.grad_f : adv.grad_f;
      ProbEmbedding probe = f.e;
      const Vec fd = FiniteDiffGrad(
          [&](const Vec &x) {
            probe.sub_embeddings = x;
            return which == 0
                       ? VariationClsLoss(f.disc, probe, f.masks, f.labels).loss
                       : VariationAdvLoss(f.disc, probe, f.masks, f.labels)
                             .loss;
          },
          f.e.sub_embeddings, 1e-6);
      for (size_t i = 0; i < analytic.size(); ++i) {
        const double rel =
            std::fabs(analytic[i] - fd[i]) /
            std::max({std::fabs(analytic[i]), std::fabs(fd[i]), 1e-2});
        REQUIRE(rel < 1e-5);
      }
    }
  }
}

TEST_CASE("adversarial loss: fully uninformative masks cost (M+T)(M+T-1) log 2") {
  DiscFixture f = MakeDiscFixture(6, 29);
  f.disc.weight.SetZero();
  std::fill(f.disc.bias.begin(), f.disc.bias.end(), 0.0);
  const VariationLossResult res =
      VariationAdvLoss(f.disc, f.e, f.masks, f.labels);
  CHECK(res.loss == doctest::Approx(30.0 * std::log(2.0)).epsilon(1e-12));
  // All predictions already at 1/2: stationary point.
  for (double g : res.grad_f) CHECK(std::fabs(g) < 1e-15);
}

TEST_CASE("adversarial per-term minimum sits at one half") {
  // Single pair of variations; sweep the off-variation logit densely. The
  // per-term cost -1/2(log p + log(1-p)) bottoms out at log 2, p = 1/2.
  auto term = [](double logit) {
    const double p = 1.0 / (1.0 + std::exp(-logit));
    return -0.5 * (std::log(p) + std::log(1.0 - p));
  };
  const double at_half = term(0.0);
  CHECK(at_half == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (double logit = -6.0; logit <= 6.0; logit += 0.01)
    CHECK(term(logit) >= at_half - 1e-12);
  // The term grows without bound toward saturation (caps only at the
  // documented probability floor).
  CHECK(term(8.0) > term(4.0));
  CHECK(term(16.0) > term(8.0));
  CHECK(term(-16.0) > term(-8.0));
}

TEST_CASE("total loss combines parts with the configured weights") {
  LossBreakdown parts;
  parts.idt = 1.0;
  parts.reg = 2.0;
  parts.cls = 3.0;
  parts.adv = 4.0;
  CHECK(TotalLoss(parts, 0.001, 2.0, 2.0) ==
        doctest::Approx(15.002).epsilon(1e-15));
  CHECK(TotalLoss(parts, 0.0, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(TotalLoss(parts, -0.1, 2.0, 2.0), ConfigError);
}

TEST_CASE("prototype bank stays unit-norm per group after renormalization") {
  PrototypeBank bank = InitPrototypeBank(6, 4, 3, RngStream(31, "bank"));
  // Perturb, renormalize, verify.
  RngStream rng(32, "noise");
  for (double &v : bank.prototypes.Data()) v += 0.3 * rng.Normal();
  bank.RenormalizeGroups();
  for (int j = 0; j < 6; ++j)
    for (int k = 0; k < 4; ++k)
      CHECK(std::fabs(Norm(bank.Sub(j, k)) - 1.0) < 1e-10);
}

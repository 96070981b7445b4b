// tests/test_encoder.cc

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
#include "subemb/encoder.h"

using namespace subemb;

namespace {

EncoderConfig SmallConfig() {
  EncoderConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dims = {8, 5};
  cfg.embedding_dim = 8;
  cfg.group_count = 2;
  cfg.initial_confidence = 4.0;
  return cfg;
}

Vec RandomInput(int dim, RngStream rng) {
  Vec x(dim);
  for (double &v : x) v = rng.Normal();
  return x;
}

}  // namespace

TEST_CASE("config validation rejects bad shapes") {
  EncoderConfig cfg = SmallConfig();
  cfg.group_count = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = SmallConfig();
  cfg.hidden_dims = {};
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = SmallConfig();
  cfg.nonlinearity = "sigmoid";
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
}

TEST_CASE("forward produces the declared partition") {
  EncoderConfig cfg;
  cfg.input_dim = 16;
  cfg.hidden_dims = {24};
  cfg.embedding_dim = 64;
  cfg.group_count = 8;
  const EncoderParams params = InitEncoder(cfg, RngStream(3, "init"));
  const ProbEmbedding e =
      EncoderForward(params, RandomInput(16, RngStream(4, "x")));
  CHECK(e.group_count == 8);
  CHECK(e.group_dim == 8);
  CHECK(static_cast<int>(e.sub_embeddings.size()) == 64);
  for (int k = 0; k < 8; ++k)
    CHECK(std::fabs(Norm(e.Group(k)) - 1.0) < 1e-10);
  for (double s : e.confidences) CHECK(s > 0.0);
}

TEST_CASE("same seed gives bit-identical parameters") {
  const EncoderConfig cfg = SmallConfig();
  const EncoderParams a = InitEncoder(cfg, RngStream(77, "init"));
  const EncoderParams b = InitEncoder(cfg, RngStream(77, "init"));
  CHECK(ParamsToVector(a) == ParamsToVector(b));

  const Vec x = RandomInput(cfg.input_dim, RngStream(5, "x"));
  const ProbEmbedding ea = EncoderForward(a, x);
  const ProbEmbedding eb = EncoderForward(b, x);
  CHECK(ea.sub_embeddings == eb.sub_embeddings);
  CHECK(ea.confidences == eb.confidences);
}

TEST_CASE("initial confidences concentrate near the configured constant") {
  EncoderConfig cfg;
  cfg.input_dim = 32;
  cfg.hidden_dims = {48};
  cfg.embedding_dim = 32;
  cfg.group_count = 8;
  cfg.initial_confidence = 16.0;
  const EncoderParams params = InitEncoder(cfg, RngStream(21, "init"));
  RngStream xs(22, "inputs");
  for (int i = 0; i < 50; ++i) {
    const ProbEmbedding e =
        EncoderForward(params, RandomInput(32, xs.Derive(i)));
    for (double s : e.confidences) {
      CHECK(s > 8.0);
      CHECK(s < 32.0);
    }
  }
}

TEST_CASE("confidence logits of zero give unit confidence") {
  EncoderConfig cfg = SmallConfig();
  cfg.initial_confidence = 1.0;  // bias = log(1) = 0
  EncoderParams params = InitEncoder(cfg, RngStream(9, "init"));
  params.conf_head.weight.SetZero();
  const ProbEmbedding e =
      EncoderForward(params, RandomInput(cfg.input_dim, RngStream(1, "x")));
  for (double s : e.confidences) CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("forward is pure") {
  const EncoderConfig cfg = SmallConfig();
  const EncoderParams params = InitEncoder(cfg, RngStream(13, "init"));
  const Vec x = RandomInput(cfg.input_dim, RngStream(2, "x"));
  const ProbEmbedding a = EncoderForward(params, x);
  const ProbEmbedding b = EncoderForward(params, x);
  CHECK(a.sub_embeddings == b.sub_embeddings);
  CHECK(a.confidences == b.confidences);
}

TEST_CASE("dimension mismatch is rejected") {
  const EncoderParams params = InitEncoder(SmallConfig(), RngStream(1, "init"));
  CHECK_THROWS_AS(EncoderForward(params, Vec{1.0, 2.0}), DimensionError);
}

TEST_CASE("backward with zero upstream gives zero parameter gradients") {
  const EncoderConfig cfg = SmallConfig();
  const EncoderParams params = InitEncoder(cfg, RngStream(31, "init"));
  EncoderTape tape;
  EncoderForward(params, RandomInput(cfg.input_dim, RngStream(8, "x")), &tape);
  EncoderGrads grads = ZeroGradsLike(params);
  EncoderBackward(params, tape, Vec(cfg.embedding_dim, 0.0),
                  Vec(cfg.group_count, 0.0), &grads);
  for (double g : GradsToVector(cfg, grads)) CHECK(g == 0.0);
}

TEST_CASE("backward requires a populated tape") {
  const EncoderParams params = InitEncoder(SmallConfig(), RngStream(1, "init"));
  EncoderTape empty;
  EncoderGrads grads = ZeroGradsLike(params);
  CHECK_THROWS_AS(
      EncoderBackward(params, empty, Vec(8, 0.0), Vec(2, 0.0), &grads),
      NumericError);
}

TEST_CASE("backward matches central differences on random triples") {
  RngStream rng(101, "triples");
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RngStream r = rng.Derive(trial);
    EncoderConfig cfg;
    cfg.input_dim = r.UniformInt(3, 8);
    cfg.hidden_dims = {r.UniformInt(4, 8)};
    if (r.Uniform() < 0.5) cfg.hidden_dims.push_back(r.UniformInt(3, 6));
    cfg.group_count = r.UniformInt(1, 3);
    cfg.embedding_dim = cfg.group_count * r.UniformInt(2, 4);
    cfg.initial_confidence = r.Uniform(0.5, 4.0);

    const EncoderParams params = InitEncoder(cfg, r.Derive("init"));
    const Vec x = RandomInput(cfg.input_dim, r.Derive("x"));
    Vec g_f(cfg.embedding_dim), g_s(cfg.group_count);
    RngStream up = r.Derive("upstream");
    for (double &v : g_f) v = up.Normal();
    for (double &v : g_s) v = up.Normal();

    EncoderTape tape;
    EncoderForward(params, x, &tape);
    EncoderGrads grads = ZeroGradsLike(params);
    EncoderBackward(params, tape, g_f, g_s, &grads);
    const Vec analytic = GradsToVector(cfg, grads);

    EncoderParams probe = params;
    const Vec fd = FiniteDiffGrad(
        [&](const Vec &flat) {
          VectorToParams(flat, &probe);
          const ProbEmbedding e = EncoderForward(probe, x);
          return Dot(g_f, e.sub_embeddings) + Dot(g_s, e.confidences);
        },
        ParamsToVector(params), 1e-5);

    for (size_t i = 0; i < analytic.size(); ++i) {
      const double rel = std::fabs(analytic[i] - fd[i]) /
                         std::max({std::fabs(analytic[i]), std::fabs(fd[i]),
                                   1e-2});
      REQUIRE_MESSAGE(rel < 1e-5, "coordinate " << ParamName(cfg, i));
    }
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("gradient through group normalization scales orthogonal upstream") {
  // For upstream orthogonal to the normalized group, the projection is the
  // identity and the gradient is upstream / ||raw||.
  EncoderConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden_dims = {4};
  cfg.embedding_dim = 2;
  cfg.group_count = 1;
  const EncoderParams params = InitEncoder(cfg, RngStream(55, "init"));
  const Vec x = RandomInput(4, RngStream(56, "x"));

  EncoderTape tape;
  const ProbEmbedding e = EncoderForward(params, x, &tape);
  // Build an upstream orthogonal to the unit group.
  const Vec upstream = {-e.sub_embeddings[1], e.sub_embeddings[0]};
  const Vec through =
      L2NormalizeBackward(e.sub_embeddings, tape.group_norms[0], upstream);
  for (int i = 0; i < 2; ++i)
    CHECK(through[i] ==
          doctest::Approx(upstream[i] / tape.group_norms[0]).epsilon(1e-12));
}

TEST_CASE("relu trunk forward/backward also matches finite differences") {
  // The kink at zero has measure zero; random points are differentiable.
  RngStream rng(202, "relu");
  for (int trial = 0; trial < 5; ++trial) {
    RngStream r = rng.Derive(trial);
    EncoderConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden_dims = {7};
    cfg.embedding_dim = 6;
    cfg.group_count = 2;
    cfg.nonlinearity = "relu";
    const EncoderParams params = InitEncoder(cfg, r.Derive("init"));
    const Vec x = RandomInput(cfg.input_dim, r.Derive("x"));
    Vec g_f(cfg.embedding_dim), g_s(cfg.group_count);
    RngStream up = r.Derive("up");
    for (double &v : g_f) v = up.Normal();
    for (double &v : g_s) v = up.Normal();

    EncoderTape tape;
    EncoderForward(params, x, &tape);
    EncoderGrads grads = ZeroGradsLike(params);
    EncoderBackward(params, tape, g_f, g_s, &grads);
    const Vec analytic = GradsToVector(cfg, grads);

    EncoderParams probe = params;
    const Vec fd = FiniteDiffGrad(
        [&](const Vec &flat) {
          VectorToParams(flat, &probe);
          const ProbEmbedding e = EncoderForward(probe, x);
          return Dot(g_f, e.sub_embeddings) + Dot(g_s, e.confidences);
        },
        ParamsToVector(params), 1e-6);
    for (size_t i = 0; i < analytic.size(); ++i) {
      const double rel = std::fabs(analytic[i] - fd[i]) /
                         std::max({std::fabs(analytic[i]), std::fabs(fd[i]),
                                   1e-2});
      REQUIRE(rel < 1e-4);
    }
  }
}

TEST_CASE("param names address the flat layout") {
  const EncoderConfig cfg = SmallConfig();
  const EncoderParams params = InitEncoder(cfg, RngStream(1, "init"));
  CHECK(ParamName(cfg, 0) == "trunk[0].weight[0,0]");
  const size_t total = ParamCount(params);
  CHECK(ParamName(cfg, total - 1) ==
        "conf_head.bias[" + std::to_string(cfg.group_count - 1) + "]");
  CHECK(ParamName(cfg, total) == "out-of-range");
}

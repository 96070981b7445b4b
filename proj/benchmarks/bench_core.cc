// benchmarks/bench_core.cc

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

#include <benchmark/benchmark.h>

#include "subemb/encoder.h"
#include "subemb/losses.h"
#include "subemb/masks.h"
#include "subemb/scorer.h"
#include "subemb/synthdata.h"
#include "subemb/trainer.h"

namespace subemb {
namespace {

EncoderConfig DeskEncoderConfig() {
  EncoderConfig cfg;
  cfg.input_dim = 64;
  cfg.hidden_dims = {128};
  cfg.embedding_dim = 64;
  cfg.group_count = 8;
  return cfg;
}

Vec RandomInput(int dim, uint64_t seed) {
  RngStream rng(seed, "bench-input");
  Vec x(dim);
  for (double &v : x) v = rng.Normal();
  return x;
}

void BM_EncoderForward(benchmark::State &state) {
  const EncoderParams params = InitEncoder(DeskEncoderConfig(), RngStream(1, "init"));
  const Vec x = RandomInput(64, 2);
  for (auto _ : state) {
    ProbEmbedding e = EncoderForward(params, x);
    benchmark::DoNotOptimize(e.sub_embeddings.data());
  }
}
BENCHMARK(BM_EncoderForward);

void BM_EncoderBackward(benchmark::State &state) {
  const EncoderParams params = InitEncoder(DeskEncoderConfig(), RngStream(1, "init"));
  const Vec x = RandomInput(64, 2);
  EncoderTape tape;
  EncoderForward(params, x, &tape);
  RngStream up(3, "upstream");
  Vec g_f(64), g_s(8);
  for (double &v : g_f) v = up.Normal();
  for (double &v : g_s) v = up.Normal();
  for (auto _ : state) {
    EncoderGrads grads = ZeroGradsLike(params);
    EncoderBackward(params, tape, g_f, g_s, &grads);
    benchmark::DoNotOptimize(grads.conf_head.bias.data());
  }
}
BENCHMARK(BM_EncoderBackward);

void BM_IdtLossWithGrads(benchmark::State &state) {
  const int n_identities = static_cast<int>(state.range(0));
  const EncoderParams params = InitEncoder(DeskEncoderConfig(), RngStream(1, "init"));
  const ProbEmbedding e = EncoderForward(params, RandomInput(64, 2));
  const PrototypeBank bank =
      InitPrototypeBank(n_identities, 8, 8, RngStream(4, "bank"));
  for (auto _ : state) {
    IdtResult res = IdtLoss(e, bank, 0, 4.0);
    benchmark::DoNotOptimize(res.loss);
  }
}
BENCHMARK(BM_IdtLossWithGrads)->Arg(20)->Arg(200);

void BM_DecorrelationLosses(benchmark::State &state) {
  const EncoderParams params = InitEncoder(DeskEncoderConfig(), RngStream(1, "init"));
  const ProbEmbedding e = EncoderForward(params, RandomInput(64, 2));
  const MaskSet masks = GenerateMasks(8, 6, RngStream(5, "masks"));
  const Discriminator disc = InitDiscriminator(6, 64, RngStream(6, "disc"));
  const std::vector<int> labels = {1, 0, 1, 1, 0, 1};
  for (auto _ : state) {
    VariationLossResult cls = VariationClsLoss(disc, e, masks, labels);
    VariationLossResult adv = VariationAdvLoss(disc, e, masks, labels);
    benchmark::DoNotOptimize(cls.loss + adv.loss);
  }
}
BENCHMARK(BM_DecorrelationLosses);

void BM_PairScoreMls(benchmark::State &state) {
  const EncoderParams params = InitEncoder(DeskEncoderConfig(), RngStream(1, "init"));
  const ProbEmbedding a = EncoderForward(params, RandomInput(64, 7));
  const ProbEmbedding b = EncoderForward(params, RandomInput(64, 8));
  for (auto _ : state) {
    PairScore s = PairScoreMls(a, b, 64);
    benchmark::DoNotOptimize(s.value);
  }
}
BENCHMARK(BM_PairScoreMls);

void BM_TrainStep(benchmark::State &state) {
  DatasetConfig dc;
  dc.n_train_identities = 20;
  dc.samples_per_identity = 10;
  const Dataset ds = MakeDataset(dc);
  TrainConfig cfg;
  cfg.threads = static_cast<int>(state.range(0));

  RngStream root(cfg.seed, "train");
  EncoderConfig enc_cfg = DeskEncoderConfig();
  EncoderParams params = InitEncoder(enc_cfg, root.Derive("init"));
  PrototypeBank bank = InitPrototypeBank(20, 8, 8, root.Derive("prototypes"));
  MaskSet masks = GenerateMasks(8, 6, root.Derive("masks"));
  Discriminator disc = InitDiscriminator(6, 64, root.Derive("disc-init"));
  OptimizerState opt;
  opt.encoder_velocity = ZeroGradsLike(params);
  opt.bank_velocity = Mat(20, 64);
  opt.disc_weight_velocity = Mat(6, 64);
  opt.disc_bias_velocity = Vec(6, 0.0);

  std::vector<const VariationSample *> batch;
  for (int i = 0; i < cfg.batch_size && i < static_cast<int>(ds.train.size());
       ++i)
    batch.push_back(&ds.train[i]);

  for (auto _ : state) {
    LossBreakdown parts = TrainStep(batch, cfg, &params, &bank, &disc, masks,
                                    &opt, cfg.initial_confidence, cfg.threads);
    benchmark::DoNotOptimize(parts.total);
  }
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace subemb

BENCHMARK_MAIN();

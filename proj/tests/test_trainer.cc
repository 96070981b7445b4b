// tests/test_trainer.cc

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
#include "subemb/trainer.h"
#include "test_util.h"

using namespace subemb;

namespace {

DatasetConfig TinyDataConfig() {
  DatasetConfig cfg;
  cfg.n_train_identities = 5;
  cfg.n_test_identities = 3;
  cfg.samples_per_identity = 8;
  cfg.observation_dim = 16;
  cfg.noise_scale = 0.15;
  cfg.seed = 11;
  return cfg;
}

TrainConfig TinyTrainConfig() {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.embedding_dim = 16;
  cfg.group_count = 4;
  cfg.hidden_dims = {20};
  cfg.margin = 2.0;
  cfg.initial_confidence = 4.0;
  cfg.seed = 21;
  return cfg;
}

}  // namespace

TEST_CASE("training is bitwise deterministic under the seed") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  const TrainConfig cfg = TinyTrainConfig();

  TrainLog log_a, log_b;
  const ModelBundle a = Train(ds, cfg, &log_a);
  const ModelBundle b = Train(ds, cfg, &log_b);

  CHECK(ParamsToVector(a.encoder) == ParamsToVector(b.encoder));
  CHECK(a.bank.prototypes.Data() == b.bank.prototypes.Data());
  CHECK(a.disc.weight.Data() == b.disc.weight.Data());
  REQUIRE(log_a.epochs.size() == log_b.epochs.size());
  for (size_t i = 0; i < log_a.epochs.size(); ++i) {
    CHECK(log_a.epochs[i].mean.total == log_b.epochs[i].mean.total);
    CHECK(log_a.epochs[i].mean.idt == log_b.epochs[i].mean.idt);
  }
}

TEST_CASE("thread count does not change the trained model") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig cfg = TinyTrainConfig();
  cfg.threads = 1;
  const ModelBundle one = Train(ds, cfg);
  cfg.threads = 4;
  const ModelBundle four = Train(ds, cfg);
  CHECK(ParamsToVector(one.encoder) == ParamsToVector(four.encoder));
  CHECK(one.bank.prototypes.Data() == four.bank.prototypes.Data());
  CHECK(one.disc.weight.Data() == four.disc.weight.Data());
}

TEST_CASE("loss decomposition identity holds at every observed step") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  const TrainConfig cfg = TinyTrainConfig();
  int steps = 0;
  Train(ds, cfg, nullptr, [&](int, const LossBreakdown &parts) {
    const double combined = parts.idt + cfg.lambda_reg * parts.reg +
                            cfg.lambda_cls * parts.cls +
                            cfg.lambda_adv * parts.adv;
    REQUIRE(std::fabs(parts.total - combined) < 1e-12);
    ++steps;
  });
  CHECK(steps == 4 * 5);  // epochs * ceil(40 / 8)
}

TEST_CASE("decorrelation-off reduces to pure confidence-aware softmax") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig cfg = TinyTrainConfig();
  cfg.ablation.decorrelation = false;

  TrainLog log;
  const ModelBundle bundle = Train(ds, cfg, &log);
  for (const EpochRecord &r : log.epochs) {
    CHECK(r.mean.cls == 0.0);
    CHECK(r.mean.adv == 0.0);
    CHECK(r.mean.disc == 0.0);
  }
  // Placeholder discriminator stays at zero.
  for (double w : bundle.disc.weight.Data()) CHECK(w == 0.0);
}

TEST_CASE("discriminator training never feeds the encoder") {
  // With the decorrelation weights zeroed, the encoder objective is
  // untouched by the discriminator; a run with the discriminator training
  // alongside (decorrelation on, lambda_cls = lambda_adv = 0) must produce
  // bitwise the same encoder and prototypes as a run with no discriminator.
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig with_disc = TinyTrainConfig();
  with_disc.lambda_cls = 0.0;
  with_disc.lambda_adv = 0.0;
  TrainConfig without_disc = with_disc;
  without_disc.ablation.decorrelation = false;

  const ModelBundle a = Train(ds, with_disc);
  const ModelBundle b = Train(ds, without_disc);
  CHECK(ParamsToVector(a.encoder) == ParamsToVector(b.encoder));
  CHECK(a.bank.prototypes.Data() == b.bank.prototypes.Data());
  // The discriminator itself did move in the first run.
  bool disc_moved = false;
  for (double w : a.disc.weight.Data())
    if (std::fabs(w) > 0.1) disc_moved = true;
  CHECK(disc_moved);
}

TEST_CASE("a single small step descends the objective") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig cfg = TinyTrainConfig();
  cfg.lr_encoder = 1e-3;
  cfg.lr_prototypes = 1e-3;
  cfg.lr_discriminator = 0.0;  // hold the discriminator fixed
  cfg.momentum = 0.0;
  cfg.ablation.variation_augmentation = false;

  RngStream root(cfg.seed, "train");
  EncoderConfig enc_cfg;
  enc_cfg.input_dim = ds.config.observation_dim;
  enc_cfg.hidden_dims = cfg.hidden_dims;
  enc_cfg.embedding_dim = cfg.embedding_dim;
  enc_cfg.group_count = cfg.group_count;
  enc_cfg.initial_confidence = cfg.initial_confidence;
  EncoderParams params = InitEncoder(enc_cfg, root.Derive("init"));
  PrototypeBank bank = InitPrototypeBank(5, cfg.group_count,
                                         enc_cfg.GroupDim(),
                                         root.Derive("prototypes"));
  MaskSet masks = GenerateMasks(cfg.group_count, ds.NumVariations(),
                                root.Derive("masks"));
  Discriminator disc = InitDiscriminator(ds.NumVariations(),
                                         cfg.embedding_dim,
                                         root.Derive("disc-init"));
  OptimizerState opt;
  opt.encoder_velocity = ZeroGradsLike(params);
  opt.bank_velocity = Mat(bank.n_identities, bank.Dim());
  opt.disc_weight_velocity = Mat(disc.weight.NumRows(), disc.weight.NumCols());
  opt.disc_bias_velocity = Vec(disc.bias.size(), 0.0);

  const VariationSample &sample = ds.train[0];
  const double before =
      EvaluateSampleLoss(sample, params, bank, disc, masks, cfg,
                         cfg.initial_confidence)
          .total;
  TrainStep({&sample}, cfg, &params, &bank, &disc, masks, &opt,
            cfg.initial_confidence, 1);
  const double after =
      EvaluateSampleLoss(sample, params, bank, disc, masks, cfg,
                         cfg.initial_confidence)
          .total;
  CHECK(after < before);
}

TEST_CASE("ablation flags reproduce the baseline grid rows") {
  // Baseline: no augmentation, shared constant confidence, single embedding,
  // no decorrelation. A adds augmentation, B adds confidence, C adds
  // multiple embeddings, E adds decorrelation.
  TrainConfig cfg = TinyTrainConfig();
  cfg.ablation = {false, false, false, false};
  CHECK(cfg.EffectiveGroupCount() == 1);

  cfg.ablation.variation_augmentation = true;  // row A
  CHECK(cfg.EffectiveGroupCount() == 1);

  cfg.ablation.confidence_aware = true;  // row B
  CHECK(cfg.EffectiveGroupCount() == 1);

  cfg.ablation.multiple_embeddings = true;  // row C
  CHECK(cfg.EffectiveGroupCount() == cfg.group_count);

  cfg.ablation.decorrelation = true;  // row E
  cfg.Validate();

  // Shared-constant-confidence mode really emits constants.
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig base = TinyTrainConfig();
  base.epochs = 1;
  base.ablation = {true, false, true, true};
  const ModelBundle bundle = Train(ds, base);
  const ProbEmbedding e = EmbedObservation(bundle, ds.train[0].x);
  for (double s : e.confidences)
    CHECK(s == doctest::Approx(base.initial_confidence).epsilon(1e-15));
}

TEST_CASE("diverging training reports the offending term") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig cfg = TinyTrainConfig();
  cfg.lr_encoder = 1e14;  // guaranteed blow-up
  cfg.epochs = 3;
  try {
    Train(ds, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite") != std::string::npos);
  }
}

TEST_CASE("confidence fine-tuning freezes everything but the confidence head") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig cfg = TinyTrainConfig();
  const ModelBundle trained = Train(ds, cfg);

  const std::vector<std::pair<Vec, Vec>> pairs = BuildGenuinePairs(ds, 4, 33);

  SUBCASE("zero epochs is a no-op") {
    ModelBundle bundle = trained;
    const FinetuneReport report = FinetuneConfidence(&bundle, pairs, 0, 0.01);
    CHECK(ParamsToVector(bundle.encoder) == ParamsToVector(trained.encoder));
    CHECK(bundle.confidence_finetuned == false);
    CHECK(report.initial_objective == report.final_objective);
  }

  SUBCASE("only the confidence head moves and the objective never drops") {
    ModelBundle bundle = trained;
    const FinetuneReport report = FinetuneConfidence(&bundle, pairs, 15, 5e-4);
    CHECK(bundle.confidence_finetuned);
    CHECK(report.final_objective >= report.initial_objective);

    // Trunk and embedding head byte-identical.
    for (size_t i = 0; i < trained.encoder.trunk.size(); ++i) {
      CHECK(bundle.encoder.trunk[i].weight.Data() ==
            trained.encoder.trunk[i].weight.Data());
      CHECK(bundle.encoder.trunk[i].bias == trained.encoder.trunk[i].bias);
    }
    CHECK(bundle.encoder.embed_head.weight.Data() ==
          trained.encoder.embed_head.weight.Data());
    CHECK(bundle.encoder.embed_head.bias == trained.encoder.embed_head.bias);
    CHECK(bundle.bank.prototypes.Data() == trained.bank.prototypes.Data());
    CHECK(bundle.disc.weight.Data() == trained.disc.weight.Data());

    // Embeddings unchanged, confidences free to differ.
    const ProbEmbedding before = EmbedObservation(trained, ds.train[0].x);
    const ProbEmbedding after = EmbedObservation(bundle, ds.train[0].x);
    CHECK(before.sub_embeddings == after.sub_embeddings);
  }

  SUBCASE("empty pair set is rejected") {
    ModelBundle bundle = trained;
    CHECK_THROWS_AS(FinetuneConfidence(&bundle, {}, 5, 0.01), ConfigError);
  }
}

TEST_CASE("checkpoint sink fires on the configured interval") {
  const Dataset ds = MakeDataset(TinyDataConfig());
  TrainConfig cfg = TinyTrainConfig();
  cfg.epochs = 4;
  cfg.save_interval = 2;
  std::vector<int> saved_epochs;
  Train(ds, cfg, nullptr, {}, [&](int epoch, const ModelBundle &) {
    saved_epochs.push_back(epoch);
  });
  CHECK(saved_epochs == std::vector<int>{1, 3});
}

TEST_CASE("train config validation") {
  TrainConfig cfg = TinyTrainConfig();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = TinyTrainConfig();
  cfg.lambda_cls = -1.0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = TinyTrainConfig();
  cfg.group_count = 3;  // does not divide 16
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  // ... unless multiple embeddings are off (K forced to 1).
  cfg.ablation.multiple_embeddings = false;
  cfg.Validate();
}

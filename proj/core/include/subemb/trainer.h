// subemb/trainer.h

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

#ifndef SUBEMB_TRAINER_H_
#define SUBEMB_TRAINER_H_

#include <functional>
#include <string>
#include <vector>

#include "subemb/encoder.h"
#include "subemb/losses.h"
#include "subemb/masks.h"
#include "subemb/synthdata.h"

namespace subemb {

// Module toggles mirroring the ablation grid: variation augmentation,
// confidence-aware identification (off = one shared constant confidence, the
// plain margin-softmax baseline), multiple sub-embeddings (off = K forced to
// 1), and mask-based decorrelation (off = no discriminator, cls/adv weights
// zero).
struct AblationFlags {
  bool variation_augmentation = true;  // VA
  bool confidence_aware = true;        // CI
  bool multiple_embeddings = true;     // ME
  bool decorrelation = true;           // DE
};

struct TrainConfig {
  int epochs = 60;
  int batch_size = 64;
  // The confidence branch exponentiates its head output; curvature there
  // grows with s^2, so the encoder rate must stay small.
  double lr_encoder = 0.003;
  double lr_prototypes = 0.05;
  double lr_discriminator = 0.05;
  double momentum = 0.9;
  double lambda_reg = 0.001;
  double lambda_cls = 2.0;
  double lambda_adv = 2.0;
  double margin = 4.0;
  int embedding_dim = 64;
  int group_count = 8;
  std::vector<int> hidden_dims = {128};
  std::string nonlinearity = "tanh";
  double initial_confidence = 8.0;
  AblationFlags ablation;
  // Per-family online-augmentation toggles (all three by default); used by
  // the corruption-ladder experiments.
  std::array<bool, kAugmentableVariations> augment_families = {true, true,
                                                               true};
  // Override of the dataset's per-family corruption probability; negative
  // means "use the dataset's".
  double augment_probability = -1.0;
  uint64_t seed = 1;
  int threads = 1;
  int save_interval = 0;  // epochs between checkpoints; 0 = final only

  void Validate() const;
  // Group count after applying the multiple-embeddings toggle.
  int EffectiveGroupCount() const {
    return ablation.multiple_embeddings ? group_count : 1;
  }
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown mean;      // batch-averaged loss parts (logits unused)
  Vec mean_confidence;     // mean s per group over the epoch
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::string ToCsv() const;
};

// Everything a trained model needs to score and be evaluated: encoder,
// prototypes, the fixed mask set, the discriminator, and the ablation state.
struct ModelBundle {
  EncoderParams encoder;
  PrototypeBank bank;
  MaskSet masks;
  Discriminator disc;
  AblationFlags ablation;
  double shared_confidence = 1.0;  // used when confidence_aware is off
  bool confidence_finetuned = false;
  TrainConfig train_config;
};

// Embedding of one observation under the bundle's ablation state (constant
// confidences when confidence-aware training was off).
ProbEmbedding EmbedObservation(const ModelBundle &bundle,
                               std::span<const double> x,
                               EncoderTape *tape = nullptr);

// Loss evaluation without gradients, used by descent checks and logging.
LossBreakdown EvaluateSampleLoss(const VariationSample &sample,
                                 const EncoderParams &params,
                                 const PrototypeBank &bank,
                                 const Discriminator &disc,
                                 const MaskSet &masks, const TrainConfig &cfg,
                                 double shared_confidence);

// SGD-with-momentum state for all trainable tensors.
struct OptimizerState {
  EncoderGrads encoder_velocity;
  Mat bank_velocity;
  Mat disc_weight_velocity;
  Vec disc_bias_velocity;
};

// One alternating step on a mini-batch: first the discriminator descends its
// own loss (no encoder gradient), then the encoder and prototypes descend the
// total objective with the updated discriminator frozen. Prototypes are
// re-projected to the unit sphere afterwards. Returns the batch-mean loss
// parts. Throws NumericError naming the term if any loss goes non-finite.
LossBreakdown TrainStep(const std::vector<const VariationSample *> &batch,
                        const TrainConfig &cfg, EncoderParams *params,
                        PrototypeBank *bank, Discriminator *disc,
                        const MaskSet &masks, OptimizerState *opt,
                        double shared_confidence, int threads);

using StepObserver = std::function<void(int step, const LossBreakdown &)>;
using CheckpointSink = std::function<void(int epoch, const ModelBundle &)>;

ModelBundle Train(const Dataset &dataset, const TrainConfig &cfg,
                  TrainLog *log = nullptr, const StepObserver &observer = {},
                  const CheckpointSink &checkpoint_sink = {});

// Confidence fine-tuning for probabilistic aggregation: freezes the trunk,
// the embedding head and the prototypes, and adjusts only the confidence
// head to maximize the mean mutual-likelihood score over genuine pairs. The
// returned parameters are the best iterate by that objective, so the
// objective never ends lower than it started.
struct FinetuneReport {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int epochs_run = 0;
};

FinetuneReport FinetuneConfidence(ModelBundle *bundle,
                                  const std::vector<std::pair<Vec, Vec>>
                                      &genuine_pairs,
                                  int epochs, double lr);

// Builds genuine pairs from the train split for confidence fine-tuning,
// running the dataset's corruption policy on the pair members so the
// confidence head sees quality variation.
std::vector<std::pair<Vec, Vec>> BuildGenuinePairs(const Dataset &dataset,
                                                   int pairs_per_identity,
                                                   uint64_t seed);

}  // namespace subemb

#endif  // SUBEMB_TRAINER_H_

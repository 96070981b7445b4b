// core/src/trainer.cc

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

#include "subemb/trainer.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "subemb/parallel.h"
#include "subemb/scorer.h"

namespace subemb {

void TrainConfig::Validate() const {
  if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (lr_encoder < 0.0 || lr_prototypes < 0.0 || lr_discriminator < 0.0)
    throw ConfigError("TrainConfig: learning rates must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ConfigError("TrainConfig: momentum must be in [0, 1)");
  if (lambda_reg < 0.0 || lambda_cls < 0.0 || lambda_adv < 0.0)
    throw ConfigError("TrainConfig: loss weights must be >= 0");
  if (margin < 0.0) throw ConfigError("TrainConfig: margin must be >= 0");
  if (embedding_dim < 1 || group_count < 1)
    throw ConfigError("TrainConfig: dims must be >= 1");
  if (embedding_dim % EffectiveGroupCount() != 0)
    throw ConfigError("TrainConfig: embedding_dim not divisible by group_count");
  if (threads < 1) throw ConfigError("TrainConfig: threads must be >= 1");
  if (save_interval < 0)
    throw ConfigError("TrainConfig: save_interval must be >= 0");
  if (initial_confidence <= 0.0)
    throw ConfigError("TrainConfig: initial_confidence must be > 0");
}

std::string TrainLog::ToCsv() const {
  std::ostringstream out;
  const int k = epochs.empty()
                    ? 0
                    : static_cast<int>(epochs.front().mean_confidence.size());
  out << "epoch,idt,reg,cls,adv,disc,total";
  for (int i = 1; i <= k; ++i) out << ",mean_s_" << i;
  out << ",wall_seconds\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (const EpochRecord &r : epochs) {
    out << r.epoch;
    emit(r.mean.idt);
    emit(r.mean.reg);
    emit(r.mean.cls);
    emit(r.mean.adv);
    emit(r.mean.disc);
    emit(r.mean.total);
    for (double s : r.mean_confidence) emit(s);
    emit(r.wall_seconds);
    out << '\n';
  }
  return out.str();
}

ProbEmbedding EmbedObservation(const ModelBundle &bundle,
                               std::span<const double> x, EncoderTape *tape) {
  ProbEmbedding e = EncoderForward(bundle.encoder, x, tape);
  if (!bundle.ablation.confidence_aware)
    std::fill(e.confidences.begin(), e.confidences.end(),
              bundle.shared_confidence);
  return e;
}

namespace {

ProbEmbedding ForwardWithMode(const EncoderParams &params,
                              std::span<const double> x, bool confidence_aware,
                              double shared_confidence, EncoderTape *tape) {
  ProbEmbedding e = EncoderForward(params, x, tape);
  if (!confidence_aware)
    std::fill(e.confidences.begin(), e.confidences.end(), shared_confidence);
  return e;
}

struct SampleWork {
  VariationSample sample;   // possibly augmented copy
  EncoderTape tape;
  ProbEmbedding embedding;
  LossBreakdown parts;
  EncoderGrads encoder_grads;
  Mat bank_grads;
  Mat disc_weight_grads;
  Vec disc_bias_grads;
  bool has_encoder_grads = false;
};

void SgdUpdate(Vec *velocity, std::span<const double> grad, double lr,
               double momentum, std::span<double> param) {
  for (size_t i = 0; i < param.size(); ++i) {
    (*velocity)[i] = momentum * (*velocity)[i] + grad[i];
    param[i] -= lr * (*velocity)[i];
  }
}

void SgdUpdateLayer(LinearLayer *velocity, const LinearLayer &grad, double lr,
                    double momentum, LinearLayer *param) {
  SgdUpdate(&velocity->weight.Data(), grad.weight.Data(), lr, momentum,
            param->weight.Data());
  SgdUpdate(&velocity->bias, grad.bias, lr, momentum, param->bias);
}

}  // namespace

LossBreakdown EvaluateSampleLoss(const VariationSample &sample,
                                 const EncoderParams &params,
                                 const PrototypeBank &bank,
                                 const Discriminator &disc,
                                 const MaskSet &masks, const TrainConfig &cfg,
                                 double shared_confidence) {
  const ProbEmbedding e =
      ForwardWithMode(params, sample.x, cfg.ablation.confidence_aware,
                      shared_confidence, nullptr);
  LossBreakdown parts;
  IdtResult idt = IdtLoss(e, bank, sample.identity, cfg.margin);
  parts.idt = idt.loss;
  parts.logits = std::move(idt.logits);
  parts.reg = cfg.ablation.confidence_aware ? ConfReg(e) : 0.0;
  if (cfg.ablation.decorrelation) {
    parts.cls = VariationClsLoss(disc, e, masks, sample.u).loss;
    parts.adv = VariationAdvLoss(disc, e, masks, sample.u).loss;
    parts.disc = DiscLoss(disc, e, masks, sample.u).loss;
  }
  parts.total = TotalLoss(parts, cfg.lambda_reg, cfg.lambda_cls,
                          cfg.lambda_adv);
  return parts;
}

LossBreakdown TrainStep(const std::vector<const VariationSample *> &batch,
                        const TrainConfig &cfg, EncoderParams *params,
                        PrototypeBank *bank, Discriminator *disc,
                        const MaskSet &masks, OptimizerState *opt,
                        double shared_confidence, int threads) {
  if (batch.empty()) throw ConfigError("TrainStep: empty batch");
  const int n = static_cast<int>(batch.size());
  const bool use_de = cfg.ablation.decorrelation;
  const bool use_ci = cfg.ablation.confidence_aware;

  std::vector<SampleWork> work(n);
  for (int i = 0; i < n; ++i) work[i].sample = *batch[i];

  // Pass A: forward everything once; gather discriminator gradients at the
  // current encoder.
  ParallelFor(n, threads, [&](int i) {
    SampleWork &w = work[i];
    w.embedding = ForwardWithMode(*params, w.sample.x, use_ci,
                                  shared_confidence, &w.tape);
    if (use_de) {
      DiscResult d = DiscLoss(*disc, w.embedding, masks, w.sample.u);
      w.parts.disc = d.loss;
      w.disc_weight_grads = std::move(d.grad_weight);
      w.disc_bias_grads = std::move(d.grad_bias);
    }
  });

  // Discriminator step (batch-mean gradient).
  if (use_de && cfg.lr_discriminator > 0.0) {
    Mat dw(disc->weight.NumRows(), disc->weight.NumCols());
    Vec db(disc->bias.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      Axpy(1.0 / n, work[i].disc_weight_grads.Data(), dw.Data());
      Axpy(1.0 / n, work[i].disc_bias_grads, db);
    }
    CheckFinite(dw.Data(), "discriminator gradient");
    SgdUpdate(&opt->disc_weight_velocity.Data(), dw.Data(),
              cfg.lr_discriminator, cfg.momentum, disc->weight.Data());
    SgdUpdate(&opt->disc_bias_velocity, db, cfg.lr_discriminator, cfg.momentum,
              disc->bias);
  }

  // Pass B: encoder/prototype gradients of the total objective with the
  // (just updated) discriminator frozen.
  ParallelFor(n, threads, [&](int i) {
    SampleWork &w = work[i];
    IdtResult idt = IdtLoss(w.embedding, *bank, w.sample.identity, cfg.margin);
    w.parts.idt = idt.loss;
    w.parts.logits = std::move(idt.logits);
    w.bank_grads = std::move(idt.grad_bank);

    Vec grad_f = std::move(idt.grad_f);
    Vec grad_s = std::move(idt.grad_s);

    if (use_ci) {
      w.parts.reg = ConfReg(w.embedding);
      Axpy(cfg.lambda_reg, ConfRegGrad(w.embedding), grad_s);
    } else {
      w.parts.reg = 0.0;
      std::fill(grad_s.begin(), grad_s.end(), 0.0);
    }

    if (use_de) {
      VariationLossResult cls =
          VariationClsLoss(*disc, w.embedding, masks, w.sample.u);
      VariationLossResult adv =
          VariationAdvLoss(*disc, w.embedding, masks, w.sample.u);
      w.parts.cls = cls.loss;
      w.parts.adv = adv.loss;
      Axpy(cfg.lambda_cls, cls.grad_f, grad_f);
      Axpy(cfg.lambda_adv, adv.grad_f, grad_f);
    }

    w.parts.total =
        TotalLoss(w.parts, cfg.lambda_reg, cfg.lambda_cls, cfg.lambda_adv);

    w.encoder_grads = ZeroGradsLike(*params);
    EncoderBackward(*params, w.tape, grad_f, grad_s, &w.encoder_grads);
    w.has_encoder_grads = true;
  });

  // Fixed-order (by sample index) reduction keeps results independent of the
  // thread count.
  LossBreakdown mean;
  EncoderGrads total_grads = ZeroGradsLike(*params);
  Mat bank_grads(bank->n_identities, bank->Dim());
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    mean.idt += inv_n * work[i].parts.idt;
    mean.reg += inv_n * work[i].parts.reg;
    mean.cls += inv_n * work[i].parts.cls;
    mean.adv += inv_n * work[i].parts.adv;
    mean.disc += inv_n * work[i].parts.disc;
    AccumulateGrads(work[i].encoder_grads, inv_n, &total_grads);
    Axpy(inv_n, work[i].bank_grads.Data(), bank_grads.Data());
  }
  mean.total = TotalLoss(mean, cfg.lambda_reg, cfg.lambda_cls, cfg.lambda_adv);

  struct {
    const char *name;
    double value;
  } checks[] = {{"idt", mean.idt},   {"reg", mean.reg},  {"cls", mean.cls},
                {"adv", mean.adv},   {"disc", mean.disc}, {"total", mean.total}};
  for (const auto &c : checks)
    if (!std::isfinite(c.value))
      throw NumericError(std::string("training loss diverged: term '") +
                         c.name + "' is non-finite");

  // Encoder update.
  CheckFinite(GradsToVector(params->config, total_grads), "encoder gradient");
  for (size_t i = 0; i < params->trunk.size(); ++i)
    SgdUpdateLayer(&opt->encoder_velocity.trunk[i], total_grads.trunk[i],
                   cfg.lr_encoder, cfg.momentum, &params->trunk[i]);
  SgdUpdateLayer(&opt->encoder_velocity.embed_head, total_grads.embed_head,
                 cfg.lr_encoder, cfg.momentum, &params->embed_head);
  SgdUpdateLayer(&opt->encoder_velocity.conf_head, total_grads.conf_head,
                 cfg.lr_encoder, cfg.momentum, &params->conf_head);

  // Prototype update + re-projection onto the unit sphere.
  CheckFinite(bank_grads.Data(), "prototype gradient");
  SgdUpdate(&opt->bank_velocity.Data(), bank_grads.Data(), cfg.lr_prototypes,
            cfg.momentum, bank->prototypes.Data());
  bank->RenormalizeGroups();

  return mean;
}

namespace {

VariationSample MaybeAugmented(const Dataset &dataset, const TrainConfig &cfg,
                               int epoch, int index) {
  VariationSample sample = dataset.train[index];
  if (!cfg.ablation.variation_augmentation) return sample;
  const double prob = cfg.augment_probability >= 0.0
                          ? cfg.augment_probability
                          : dataset.config.apply_probability;
  RngStream rng = RngStream(cfg.seed, "augment")
                      .Derive(static_cast<uint64_t>(epoch))
                      .Derive(static_cast<uint64_t>(index));
  Augment(&sample, dataset.config.corruption, prob, dataset.plane, rng,
          cfg.augment_families);
  return sample;
}

}  // namespace

ModelBundle Train(const Dataset &dataset, const TrainConfig &cfg,
                  TrainLog *log, const StepObserver &observer,
                  const CheckpointSink &checkpoint_sink) {
  cfg.Validate();
  if (dataset.train.empty()) throw ConfigError("Train: empty train split");

  const int K = cfg.EffectiveGroupCount();
  int n_identities = 0;
  for (const VariationSample &s : dataset.train)
    n_identities = std::max(n_identities, s.identity + 1);

  RngStream root(cfg.seed, "train");

  ModelBundle bundle;
  bundle.ablation = cfg.ablation;
  bundle.shared_confidence = cfg.initial_confidence;
  bundle.train_config = cfg;

  EncoderConfig enc_cfg;
  enc_cfg.input_dim = dataset.config.observation_dim;
  enc_cfg.hidden_dims = cfg.hidden_dims;
  enc_cfg.embedding_dim = cfg.embedding_dim;
  enc_cfg.group_count = K;
  enc_cfg.nonlinearity = cfg.nonlinearity;
  enc_cfg.initial_confidence = cfg.initial_confidence;
  bundle.encoder = InitEncoder(enc_cfg, root.Derive("init"));

  // Prototypes start at the per-group-normalized class means of the initial
  // embeddings: every class is aligned with its own samples from step one.
  bundle.bank = InitPrototypeBank(n_identities, K, enc_cfg.GroupDim(),
                                  root.Derive("prototypes"));
  {
    Mat sums(n_identities, cfg.embedding_dim);
    std::vector<int> counts(n_identities, 0);
    for (const VariationSample &s : dataset.train) {
      const ProbEmbedding e = EncoderForward(bundle.encoder, s.x);
      Axpy(1.0, e.sub_embeddings, sums.Row(s.identity));
      ++counts[s.identity];
    }
    for (int j = 0; j < n_identities; ++j)
      if (counts[j] > 0)
        std::copy(sums.Row(j).begin(), sums.Row(j).end(),
                  bundle.bank.prototypes.Row(j).begin());
    bundle.bank.RenormalizeGroups();
  }

  const int n_variations = dataset.NumVariations();
  if (cfg.ablation.decorrelation) {
    bundle.masks = GenerateMasks(K, n_variations, root.Derive("masks"));
    bundle.disc = InitDiscriminator(n_variations, cfg.embedding_dim,
                                    root.Derive("disc-init"));
  } else {
    // Placeholders with consistent shapes; never trained or consulted.
    bundle.masks.group_count = K;
    bundle.disc.weight = Mat(n_variations, cfg.embedding_dim);
    bundle.disc.bias = Vec(n_variations, 0.0);
  }

  OptimizerState opt;
  opt.encoder_velocity = ZeroGradsLike(bundle.encoder);
  opt.bank_velocity = Mat(bundle.bank.n_identities, bundle.bank.Dim());
  opt.disc_weight_velocity =
      Mat(bundle.disc.weight.NumRows(), bundle.disc.weight.NumCols());
  opt.disc_bias_velocity = Vec(bundle.disc.bias.size(), 0.0);

  const int n_train = static_cast<int>(dataset.train.size());
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int> order =
        RngStream(cfg.seed, "batch").Derive(static_cast<uint64_t>(epoch))
            .Permutation(n_train);

    LossBreakdown epoch_mean;
    Vec epoch_conf(K, 0.0);
    int batches = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int end = std::min(n_train, start + cfg.batch_size);
      std::vector<VariationSample> storage;
      storage.reserve(end - start);
      for (int i = start; i < end; ++i)
        storage.push_back(MaybeAugmented(dataset, cfg, epoch, order[i]));
      std::vector<const VariationSample *> batch;
      for (const VariationSample &s : storage) batch.push_back(&s);

      const LossBreakdown parts =
          TrainStep(batch, cfg, &bundle.encoder, &bundle.bank, &bundle.disc,
                    bundle.masks, &opt, bundle.shared_confidence, cfg.threads);
      if (observer) observer(step, parts);
      ++step;
      ++batches;
      epoch_mean.idt += parts.idt;
      epoch_mean.reg += parts.reg;
      epoch_mean.cls += parts.cls;
      epoch_mean.adv += parts.adv;
      epoch_mean.disc += parts.disc;

      // Confidence statistics on the post-step batch.
      for (const VariationSample &s : storage) {
        const ProbEmbedding e =
            ForwardWithMode(bundle.encoder, s.x,
                            cfg.ablation.confidence_aware,
                            bundle.shared_confidence, nullptr);
        for (int k = 0; k < K; ++k)
          epoch_conf[k] += e.confidences[k] / (end - start);
      }
    }
    epoch_mean.idt /= batches;
    epoch_mean.reg /= batches;
    epoch_mean.cls /= batches;
    epoch_mean.adv /= batches;
    epoch_mean.disc /= batches;
    epoch_mean.total = TotalLoss(epoch_mean, cfg.lambda_reg, cfg.lambda_cls,
                                 cfg.lambda_adv);
    for (double &c : epoch_conf) c /= batches;

    if (log != nullptr) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.mean = epoch_mean;
      rec.mean_confidence = epoch_conf;
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      log->epochs.push_back(std::move(rec));
    }
    if (checkpoint_sink && cfg.save_interval > 0 &&
        (epoch + 1) % cfg.save_interval == 0 && epoch + 1 < cfg.epochs)
      checkpoint_sink(epoch, bundle);
  }
  if (checkpoint_sink) checkpoint_sink(cfg.epochs - 1, bundle);
  return bundle;
}

namespace {

// Mean MLS objective over the pair set and, optionally, accumulated
// confidence-head gradients for its maximization (loss = -objective).
double GenuinePairObjective(const ModelBundle &bundle,
                            const std::vector<std::pair<Vec, Vec>> &pairs,
                            LinearLayer *head_grads) {
  const EncoderParams &params = bundle.encoder;
  const int K = params.config.group_count;
  const int D = params.config.embedding_dim;
  const double inv_n = 1.0 / pairs.size();
  double objective = 0.0;

  for (const auto &[xa, xb] : pairs) {
    EncoderTape tape_a, tape_b;
    const ProbEmbedding ea = EncoderForward(params, xa, &tape_a);
    const ProbEmbedding eb = EncoderForward(params, xb, &tape_b);

    Vec grad_s_a(K, 0.0), grad_s_b(K, 0.0);
    for (int k = 0; k < K; ++k) {
      const double var_a = 1.0 / ea.confidences[k];
      const double var_b = 1.0 / eb.confidences[k];
      const double var = var_a + var_b;
      const double dist = SquaredDistance(ea.Group(k), eb.Group(k));
      objective += inv_n * (-0.5 * dist / var -
                            (static_cast<double>(D) / (2.0 * K)) *
                                std::log(var));
      if (head_grads != nullptr) {
        // d objective / d var, then var = 1/s gives d var / d s = -var^2.
        const double dvar =
            0.5 * dist / (var * var) - static_cast<double>(D) / (2.0 * K * var);
        grad_s_a[k] = inv_n * dvar * (-var_a * var_a);
        grad_s_b[k] = inv_n * dvar * (-var_b * var_b);
      }
    }
    if (head_grads != nullptr) {
      // Only the confidence head moves; ascend the objective through
      // s = exp(logit) with the trunk activations fixed.
      auto accumulate = [&](const EncoderTape &tape, const ProbEmbedding &e,
                            const Vec &grad_s) {
        std::span<const double> last_act =
            params.trunk.empty()
                ? std::span<const double>(tape.input)
                : std::span<const double>(tape.trunk_act.back());
        Vec dlogit(K);
        for (int k = 0; k < K; ++k)
          dlogit[k] = e.confidences[k] * grad_s[k];
        AddOuter(1.0, dlogit, last_act, &head_grads->weight);
        Axpy(1.0, dlogit, head_grads->bias);
      };
      accumulate(tape_a, ea, grad_s_a);
      accumulate(tape_b, eb, grad_s_b);
    }
  }
  return objective;
}

}  // namespace

FinetuneReport FinetuneConfidence(ModelBundle *bundle,
                                  const std::vector<std::pair<Vec, Vec>>
                                      &genuine_pairs,
                                  int epochs, double lr) {
  if (genuine_pairs.empty())
    throw ConfigError("FinetuneConfidence: empty genuine pair set");
  if (!bundle->ablation.confidence_aware)
    throw ConfigError(
        "FinetuneConfidence: model was trained with a shared constant "
        "confidence");

  FinetuneReport report;
  report.initial_objective =
      GenuinePairObjective(*bundle, genuine_pairs, nullptr);

  LinearLayer best = bundle->encoder.conf_head;
  double best_objective = report.initial_objective;

  Mat weight_velocity(best.weight.NumRows(), best.weight.NumCols());
  Vec bias_velocity(best.bias.size(), 0.0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    LinearLayer grads;
    grads.weight = Mat(best.weight.NumRows(), best.weight.NumCols());
    grads.bias = Vec(best.bias.size(), 0.0);
    GenuinePairObjective(*bundle, genuine_pairs, &grads);

    // Gradient ascent on the objective.
    LinearLayer &head = bundle->encoder.conf_head;
    for (size_t i = 0; i < head.weight.Data().size(); ++i) {
      weight_velocity.Data()[i] =
          0.9 * weight_velocity.Data()[i] + grads.weight.Data()[i];
      head.weight.Data()[i] += lr * weight_velocity.Data()[i];
    }
    for (size_t i = 0; i < head.bias.size(); ++i) {
      bias_velocity[i] = 0.9 * bias_velocity[i] + grads.bias[i];
      head.bias[i] += lr * bias_velocity[i];
    }

    const double objective =
        GenuinePairObjective(*bundle, genuine_pairs, nullptr);
    if (!std::isfinite(objective))
      throw NumericError("FinetuneConfidence: objective diverged");
    if (objective > best_objective) {
      best_objective = objective;
      best = head;
    }
    ++report.epochs_run;
  }

  // Keep the best iterate; with zero epochs this restores the input exactly.
  bundle->encoder.conf_head = best;
  if (epochs > 0) bundle->confidence_finetuned = true;
  report.final_objective = best_objective;
  return report;
}

std::vector<std::pair<Vec, Vec>> BuildGenuinePairs(const Dataset &dataset,
                                                   int pairs_per_identity,
                                                   uint64_t seed) {
  if (pairs_per_identity < 1)
    throw ConfigError("BuildGenuinePairs: pairs_per_identity must be >= 1");
  // Group train samples by identity.
  int n_identities = 0;
  for (const VariationSample &s : dataset.train)
    n_identities = std::max(n_identities, s.identity + 1);
  std::vector<std::vector<int>> by_id(n_identities);
  for (size_t i = 0; i < dataset.train.size(); ++i)
    by_id[dataset.train[i].identity].push_back(static_cast<int>(i));

  RngStream root(seed, "finetune-pairs");
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int id = 0; id < n_identities; ++id) {
    const auto &members = by_id[id];
    if (members.size() < 2) continue;
    RngStream rng = root.Derive(static_cast<uint64_t>(id));
    for (int p = 0; p < pairs_per_identity; ++p) {
      const int ia = members[rng.UniformInt(0, members.size() - 1)];
      int ib = members[rng.UniformInt(0, members.size() - 1)];
      while (ib == ia) ib = members[rng.UniformInt(0, members.size() - 1)];
      VariationSample a = dataset.train[ia];
      VariationSample b = dataset.train[ib];
      // Expose quality variation to the confidence head.
      Augment(&a, dataset.config.corruption, dataset.config.apply_probability,
              dataset.plane, rng.Derive(2 * p));
      Augment(&b, dataset.config.corruption, dataset.config.apply_probability,
              dataset.plane, rng.Derive(2 * p + 1));
      pairs.emplace_back(std::move(a.x), std::move(b.x));
    }
  }
  if (pairs.empty())
    throw ConfigError("BuildGenuinePairs: no identity has two samples");
  return pairs;
}

}  // namespace subemb

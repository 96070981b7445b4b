// core/src/losses.cc

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

#include "subemb/losses.h"

#include <cmath>

namespace subemb {

namespace {

constexpr double kLogProbFloor = -27.631021115928547;  // log(1e-12)

void CheckCompatible(const ProbEmbedding &e, const PrototypeBank &bank) {
  if (bank.n_identities < 1) throw DimensionError("empty prototype bank");
  if (e.group_count != bank.group_count || e.group_dim != bank.group_dim)
    throw DimensionError("embedding/bank partition mismatch: K " +
                         std::to_string(e.group_count) + "/" +
                         std::to_string(bank.group_count) + ", group dim " +
                         std::to_string(e.group_dim) + "/" +
                         std::to_string(bank.group_dim));
}

// log(sigmoid(x)) = -softplus(-x), stable for any finite x.
double LogSigmoid(double x) {
  if (x > 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Floored log-probability and an indicator of whether the floor clipped it.
// Below the floor the loss is constant, so its gradient contribution is zero.
double FlooredLogProb(double log_p, bool *clipped) {
  if (log_p < kLogProbFloor) {
    *clipped = true;
    return kLogProbFloor;
  }
  *clipped = false;
  return log_p;
}

void CheckLabels(const Discriminator &disc, const MaskSet &masks,
                 const std::vector<int> &labels) {
  if (static_cast<int>(labels.size()) != disc.NumVariations())
    throw DimensionError("variation label vector length " +
                         std::to_string(labels.size()) +
                         " != discriminator outputs " +
                         std::to_string(disc.NumVariations()));
  if (masks.NumVariations() != disc.NumVariations())
    throw DimensionError("mask count != discriminator outputs");
  for (int u : labels)
    if (u != 0 && u != 1)
      throw ConfigError("variation labels must be binary");
}

}  // namespace

void PrototypeBank::RenormalizeGroups() {
  for (int j = 0; j < n_identities; ++j) {
    auto row = prototypes.Row(j);
    for (int k = 0; k < group_count; ++k) {
      auto sub = row.subspan(static_cast<size_t>(k) * group_dim,
                             static_cast<size_t>(group_dim));
      const double n = Norm(sub);
      if (n == 0.0) throw NumericError("prototype sub-vector collapsed to zero");
      for (double &x : sub) x /= n;
    }
  }
}

PrototypeBank InitPrototypeBank(int n_identities, int group_count,
                                int group_dim, RngStream rng) {
  if (n_identities < 1) throw ConfigError("prototype bank needs >= 1 identity");
  PrototypeBank bank;
  bank.n_identities = n_identities;
  bank.group_count = group_count;
  bank.group_dim = group_dim;
  bank.prototypes = Mat(n_identities, group_count * group_dim);
  for (int j = 0; j < n_identities; ++j)
    for (int c = 0; c < bank.Dim(); ++c) bank.prototypes(j, c) = rng.Normal();
  bank.RenormalizeGroups();
  return bank;
}

Vec ClassLogits(const ProbEmbedding &e, const PrototypeBank &bank) {
  CheckCompatible(e, bank);
  const double inv_k = 1.0 / e.group_count;
  Vec logits(bank.n_identities, 0.0);
  for (int j = 0; j < bank.n_identities; ++j) {
    double acc = 0.0;
    for (int k = 0; k < e.group_count; ++k)
      acc += e.confidences[k] * Dot(bank.Sub(j, k), e.Group(k));
    logits[j] = inv_k * acc;
  }
  return logits;
}

Vec Posterior(const ProbEmbedding &e, const PrototypeBank &bank) {
  return Softmax(ClassLogits(e, bank));
}

IdtResult IdtLoss(const ProbEmbedding &e, const PrototypeBank &bank, int label,
                  double margin) {
  CheckCompatible(e, bank);
  if (label < 0 || label >= bank.n_identities)
    throw ConfigError("IdtLoss: label " + std::to_string(label) +
                      " outside [0, " + std::to_string(bank.n_identities) +
                      ")");

  IdtResult res;
  res.logits = ClassLogits(e, bank);
  Vec adjusted = res.logits;
  adjusted[label] -= margin;

  const Vec log_p = LogSoftmax(adjusted);
  res.loss = -log_p[label];
  res.posterior.resize(log_p.size());
  for (size_t j = 0; j < log_p.size(); ++j)
    res.posterior[j] = std::exp(log_p[j]);

  // dL/da_j = p_j - [j == label]; the margin shift drops out of da/dw.
  const int K = e.group_count;
  const int gd = e.group_dim;
  const double inv_k = 1.0 / K;
  res.grad_f.assign(e.Dim(), 0.0);
  res.grad_s.assign(K, 0.0);
  res.grad_bank = Mat(bank.n_identities, bank.Dim());
  for (int j = 0; j < bank.n_identities; ++j) {
    const double coeff = res.posterior[j] - (j == label ? 1.0 : 0.0);
    if (coeff == 0.0) continue;
    auto grow = res.grad_bank.Row(j);
    for (int k = 0; k < K; ++k) {
      const double s = e.confidences[k];
      auto w = bank.Sub(j, k);
      auto f = e.Group(k);
      const double cs = coeff * inv_k;
      for (int d = 0; d < gd; ++d) {
        grow[static_cast<size_t>(k) * gd + d] += cs * s * f[d];
        res.grad_f[static_cast<size_t>(k) * gd + d] += cs * s * w[d];
      }
      res.grad_s[k] += cs * Dot(w, f);
    }
  }
  return res;
}

ClosedFormIdtGrads IdtGradsClosedForm(const ProbEmbedding &e,
                                      const PrototypeBank &bank, int label,
                                      std::span<const double> posterior) {
  CheckCompatible(e, bank);
  if (static_cast<int>(posterior.size()) != bank.n_identities)
    throw DimensionError("IdtGradsClosedForm: posterior length mismatch");

  const int K = e.group_count;
  const int gd = e.group_dim;
  const double inv_k = 1.0 / K;
  ClosedFormIdtGrads out;
  out.grad_bank = Mat(bank.n_identities, bank.Dim());
  out.grad_f.assign(e.Dim(), 0.0);
  for (int j = 0; j < bank.n_identities; ++j) {
    const double coeff = posterior[j] - (j == label ? 1.0 : 0.0);
    auto grow = out.grad_bank.Row(j);
    for (int k = 0; k < K; ++k) {
      const double gate = inv_k * e.confidences[k] * coeff;
      auto w = bank.Sub(j, k);
      auto f = e.Group(k);
      for (int d = 0; d < gd; ++d) {
        grow[static_cast<size_t>(k) * gd + d] = gate * f[d];
        out.grad_f[static_cast<size_t>(k) * gd + d] += gate * w[d];
      }
    }
  }
  return out;
}

double ConfReg(const ProbEmbedding &e) {
  double acc = 0.0;
  for (double s : e.confidences) acc += s * s;
  return acc / e.group_count;
}

Vec ConfRegGrad(const ProbEmbedding &e) {
  Vec g(e.confidences.size());
  for (size_t k = 0; k < g.size(); ++k)
    g[k] = 2.0 * e.confidences[k] / e.group_count;
  return g;
}

Discriminator InitDiscriminator(int n_variations, int embedding_dim,
                                RngStream rng) {
  if (n_variations < 1)
    throw ConfigError("discriminator needs >= 1 variation");
  Discriminator disc;
  disc.weight = Mat(n_variations, embedding_dim);
  disc.bias = Vec(n_variations, 0.0);
  for (int r = 0; r < n_variations; ++r)
    for (int c = 0; c < embedding_dim; ++c)
      disc.weight(r, c) = 0.01 * rng.Normal();
  return disc;
}

Vec DiscriminatorProbs(const Discriminator &disc, std::span<const double> z) {
  Vec logits(disc.NumVariations());
  MatVec(disc.weight, z, logits);
  Axpy(1.0, disc.bias, logits);
  for (double &x : logits) x = std::exp(LogSigmoid(x));
  return logits;
}

DiscResult DiscLoss(const Discriminator &disc, const ProbEmbedding &e,
                    const MaskSet &masks, const std::vector<int> &labels) {
  CheckLabels(disc, masks, labels);
  DiscResult res;
  res.grad_weight = Mat(disc.weight.NumRows(), disc.weight.NumCols());
  res.grad_bias.assign(disc.bias.size(), 0.0);

  for (int t = 0; t < masks.NumVariations(); ++t) {
    const Vec z = ApplyMask(masks.masks[t], e);
    Vec logits(disc.NumVariations());
    MatVec(disc.weight, z, logits);
    Axpy(1.0, disc.bias, logits);
    for (int tp = 0; tp < disc.NumVariations(); ++tp) {
      const double l = logits[tp];
      const double log_p_true =
          labels[tp] == 1 ? LogSigmoid(l) : LogSigmoid(-l);
      bool clipped = false;
      res.loss += -FlooredLogProb(log_p_true, &clipped);
      if (clipped) continue;
      const double p = std::exp(LogSigmoid(l));
      const double dlogit = p - labels[tp];
      auto wrow = res.grad_weight.Row(tp);
      for (int c = 0; c < disc.weight.NumCols(); ++c) wrow[c] += dlogit * z[c];
      res.grad_bias[tp] += dlogit;
    }
  }
  return res;
}

namespace {

// Shared driver for the two encoder-side decorrelation losses. For mask t the
// callback reports (loss contribution, d loss / d logit) for variation tp;
// the logit gradient is pushed back through the discriminator row and the
// mask onto the normalized sub-embeddings.
template <typename TermFn>
VariationLossResult EncoderVariationLoss(const Discriminator &disc,
                                         const ProbEmbedding &e,
                                         const MaskSet &masks,
                                         const std::vector<int> &labels,
                                         TermFn &&term) {
  CheckLabels(disc, masks, labels);
  VariationLossResult res;
  res.grad_f.assign(e.Dim(), 0.0);
  const int gd = e.group_dim;

  for (int t = 0; t < masks.NumVariations(); ++t) {
    const Vec z = ApplyMask(masks.masks[t], e);
    Vec logits(disc.NumVariations());
    MatVec(disc.weight, z, logits);
    Axpy(1.0, disc.bias, logits);

    Vec dlogits(disc.NumVariations(), 0.0);
    for (int tp = 0; tp < disc.NumVariations(); ++tp) {
      double dl = 0.0;
      res.loss += term(t, tp, logits[tp], &dl);
      dlogits[tp] = dl;
    }

    // d loss / d z = W^T dlogits, then zero the masked-out groups.
    Vec dz(e.Dim(), 0.0);
    MatTVec(disc.weight, dlogits, dz);
    for (int k = 0; k < e.group_count; ++k) {
      if (!masks.masks[t][k]) continue;
      for (int d = 0; d < gd; ++d)
        res.grad_f[static_cast<size_t>(k) * gd + d] +=
            dz[static_cast<size_t>(k) * gd + d];
    }
  }
  return res;
}

}  // namespace

VariationLossResult VariationClsLoss(const Discriminator &disc,
                                     const ProbEmbedding &e,
                                     const MaskSet &masks,
                                     const std::vector<int> &labels) {
  return EncoderVariationLoss(
      disc, e, masks, labels,
      [&](int t, int tp, double logit, double *dlogit) -> double {
        if (tp != t) return 0.0;  // only the matching variation
        const double log_p_true =
            labels[tp] == 1 ? LogSigmoid(logit) : LogSigmoid(-logit);
        bool clipped = false;
        const double loss = -FlooredLogProb(log_p_true, &clipped);
        if (!clipped)
          *dlogit = std::exp(LogSigmoid(logit)) - labels[tp];
        return loss;
      });
}

VariationLossResult VariationAdvLoss(const Discriminator &disc,
                                     const ProbEmbedding &e,
                                     const MaskSet &masks,
                                     const std::vector<int> &labels) {
  return EncoderVariationLoss(
      disc, e, masks, labels,
      [&](int t, int tp, double logit, double *dlogit) -> double {
        if (tp == t) return 0.0;  // only the other variations
        bool clip_pos = false, clip_neg = false;
        const double log_p1 = FlooredLogProb(LogSigmoid(logit), &clip_pos);
        const double log_p0 = FlooredLogProb(LogSigmoid(-logit), &clip_neg);
        const double loss = -0.5 * (log_p0 + log_p1);
        const double p = std::exp(LogSigmoid(logit));
        double dl = 0.0;
        if (!clip_pos) dl += -0.5 * (1.0 - p);  // d(-1/2 log p)/dl
        if (!clip_neg) dl += 0.5 * p;           // d(-1/2 log(1-p))/dl
        *dlogit = dl;
        return loss;
      });
}

double TotalLoss(const LossBreakdown &parts, double lambda_reg,
                 double lambda_cls, double lambda_adv) {
  if (lambda_reg < 0.0 || lambda_cls < 0.0 || lambda_adv < 0.0)
    throw ConfigError("TotalLoss: negative loss weight");
  return parts.idt + lambda_reg * parts.reg + lambda_cls * parts.cls +
         lambda_adv * parts.adv;
}

}  // namespace subemb

// subemb/losses.h

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

#ifndef SUBEMB_LOSSES_H_
#define SUBEMB_LOSSES_H_

#include <vector>

#include "subemb/encoder.h"
#include "subemb/masks.h"
#include "subemb/numerics.h"
#include "subemb/rng.h"

namespace subemb {

// Learnable identity prototypes: one row per identity, partitioned into the
// same groups as the embeddings. Every sub-prototype lives on the unit
// sphere; the optimizer re-projects after each step.
struct PrototypeBank {
  int n_identities = 0;
  int group_count = 0;
  int group_dim = 0;
  Mat prototypes;  // n_identities x (group_count * group_dim)

  std::span<const double> Sub(int identity, int k) const {
    auto row = prototypes.Row(identity);
    return row.subspan(static_cast<size_t>(k) * group_dim,
                       static_cast<size_t>(group_dim));
  }
  int Dim() const { return group_count * group_dim; }
  void RenormalizeGroups();
};

PrototypeBank InitPrototypeBank(int n_identities, int group_count,
                                int group_dim, RngStream rng);

// Confidence-gated logit of sample-vs-identity:
//   a_j = (1/K) sum_k s^(k) <w_j^(k), f^(k)>.
Vec ClassLogits(const ProbEmbedding &e, const PrototypeBank &bank);

// Class posterior over identities, softmax of the gated logits, evaluated
// through log-sum-exp. No margin.
Vec Posterior(const ProbEmbedding &e, const PrototypeBank &bank);

// Identification loss with the margin subtracted from the true-class logit
// after the confidence weighting:
//   L = -log( exp(a_y - m) / (exp(a_y - m) + sum_{j != y} exp(a_j)) ).
// Gradients are returned with respect to the normalized sub-embeddings, the
// confidences and every prototype row.
struct IdtResult {
  double loss = 0.0;
  Vec logits;        // a_j without margin
  Vec posterior;     // softmax over margin-adjusted logits
  Vec grad_f;        // wrt normalized sub-embeddings, length D
  Vec grad_s;        // wrt confidences, length K
  Mat grad_bank;     // wrt prototypes, n_identities x D
};

IdtResult IdtLoss(const ProbEmbedding &e, const PrototypeBank &bank, int label,
                  double margin);

// Closed-form identification-loss gradients at a given (margin-adjusted)
// posterior. The confidence acts purely as a gate:
//   dL/dw_j^(k) = (1/K) s^(k) (p_j - [j == y]) f^(k)
//   dL/df^(k)   = (1/K) s^(k) sum_j (p_j - [j == y]) w_j^(k)
// These are the exact derivatives of the gated-logit loss and serve as the
// oracle for the reverse-mode path.
struct ClosedFormIdtGrads {
  Mat grad_bank;  // n_identities x D
  Vec grad_f;     // length D
};

ClosedFormIdtGrads IdtGradsClosedForm(const ProbEmbedding &e,
                                      const PrototypeBank &bank, int label,
                                      std::span<const double> posterior);

// Confidence regularizer (1/K) sum_k s^(k)^2, keeping confidences from
// growing without bound.
double ConfReg(const ProbEmbedding &e);
Vec ConfRegGrad(const ProbEmbedding &e);  // d/ds = 2 s / K

// Multi-label binary discriminator: a single linear map from the masked
// D-dimensional embedding to one logit per variation.
struct Discriminator {
  Mat weight;  // n_variations x D
  Vec bias;    // n_variations

  int NumVariations() const { return weight.NumRows(); }
};

Discriminator InitDiscriminator(int n_variations, int embedding_dim,
                                RngStream rng);

// Per-variation probabilities sigmoid(W z + b) for a masked embedding z.
Vec DiscriminatorProbs(const Discriminator &disc, std::span<const double> z);

// Discriminator training loss: every variation predicted from every masked
// subset, summed over masks t and variations t' (binary cross-entropy). Only
// discriminator gradients are produced; nothing flows to the encoder.
struct DiscResult {
  double loss = 0.0;
  Mat grad_weight;
  Vec grad_bias;
};

DiscResult DiscLoss(const Discriminator &disc, const ProbEmbedding &e,
                    const MaskSet &masks, const std::vector<int> &labels);

// Encoder-side decorrelation pair; discriminator parameters are constants.
// Classification: the t-th masked subset must predict variation t.
// Adversarial: the t-th masked subset must be uninformative about every
// other variation (both labels equally likely; each term is minimized at
// prediction 1/2).
struct VariationLossResult {
  double loss = 0.0;
  Vec grad_f;  // wrt normalized sub-embeddings, length D
};

VariationLossResult VariationClsLoss(const Discriminator &disc,
                                     const ProbEmbedding &e,
                                     const MaskSet &masks,
                                     const std::vector<int> &labels);
VariationLossResult VariationAdvLoss(const Discriminator &disc,
                                     const ProbEmbedding &e,
                                     const MaskSet &masks,
                                     const std::vector<int> &labels);

// Per-sample objective decomposition. `total` is always the exact combination
// idt + lambda_reg*reg + lambda_cls*cls + lambda_adv*adv; the discriminator
// loss is tracked alongside but is not part of the encoder objective.
struct LossBreakdown {
  double idt = 0.0;
  double reg = 0.0;
  double cls = 0.0;
  double adv = 0.0;
  double disc = 0.0;
  double total = 0.0;
  Vec logits;  // per-identity a_j for the sample (diagnostic)
};

// Combines the parts; throws ConfigError on negative weights.
double TotalLoss(const LossBreakdown &parts, double lambda_reg,
                 double lambda_cls, double lambda_adv);

}  // namespace subemb

#endif  // SUBEMB_LOSSES_H_

// subemb/encoder.h

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

#ifndef SUBEMB_ENCODER_H_
#define SUBEMB_ENCODER_H_

#include <span>
#include <string>
#include <vector>

#include "subemb/numerics.h"
#include "subemb/rng.h"

namespace subemb {

// Fully connected trunk that splits into two heads after the last hidden
// layer: one emits the embedding (partitioned into group_count groups, each
// L2-normalized on its own), the other emits one confidence logit per group.
// Confidences are exp(logit), so they are positive by construction.
struct EncoderConfig {
  int input_dim = 64;
  std::vector<int> hidden_dims = {128};
  int embedding_dim = 64;
  int group_count = 8;
  std::string nonlinearity = "tanh";  // "tanh" | "relu"
  double initial_confidence = 8.0;

  int GroupDim() const { return embedding_dim / group_count; }
  void Validate() const;  // throws ConfigError
};

struct LinearLayer {
  Mat weight;  // out x in
  Vec bias;    // out
};

struct EncoderParams {
  EncoderConfig config;
  std::vector<LinearLayer> trunk;
  LinearLayer embed_head;  // embedding_dim x last_hidden
  LinearLayer conf_head;   // group_count x last_hidden
};

// One sample's probabilistic embedding: group_count unit-norm sub-embeddings
// stored contiguously plus one positive confidence per group. The per-group
// uncertainty is sigma^2 = 1 / s.
struct ProbEmbedding {
  int group_count = 0;
  int group_dim = 0;
  Vec sub_embeddings;  // length group_count * group_dim
  Vec confidences;     // length group_count, all > 0

  std::span<const double> Group(int k) const {
    return {sub_embeddings.data() + static_cast<size_t>(k) * group_dim,
            static_cast<size_t>(group_dim)};
  }
  int Dim() const { return group_count * group_dim; }
  Vec Uncertainties() const;  // 1 / s per group
};

// Saved activations from one forward call; owned by the caller so batched
// training can run forwards independently.
struct EncoderTape {
  Vec input;
  std::vector<Vec> trunk_pre;   // pre-nonlinearity, per trunk layer
  std::vector<Vec> trunk_act;   // post-nonlinearity, per trunk layer
  Vec embed_pre;                // raw embedding before group normalization
  Vec group_norms;              // per group, norm of the raw slice
  Vec conf_logits;              // confidence head output
};

// Gradient buffer shaped like EncoderParams.
struct EncoderGrads {
  std::vector<LinearLayer> trunk;
  LinearLayer embed_head;
  LinearLayer conf_head;
};

EncoderParams InitEncoder(const EncoderConfig &config, RngStream rng);

ProbEmbedding EncoderForward(const EncoderParams &params,
                             std::span<const double> x,
                             EncoderTape *tape = nullptr);

EncoderGrads ZeroGradsLike(const EncoderParams &params);
void AccumulateGrads(const EncoderGrads &src, double scale, EncoderGrads *dst);

// Reverse pass. `grad_sub_embeddings` is the loss gradient with respect to
// the normalized sub-embeddings (length embedding_dim) and
// `grad_confidences` with respect to s (length group_count). Results are
// accumulated into `grads`. When `grad_input` is non-null the gradient with
// respect to x is written there.
void EncoderBackward(const EncoderParams &params, const EncoderTape &tape,
                     std::span<const double> grad_sub_embeddings,
                     std::span<const double> grad_confidences,
                     EncoderGrads *grads, Vec *grad_input = nullptr);

// Flat parameter view used by the finite-difference oracle, the optimizer
// and the checkpoint writer. Order: trunk layers (weight then bias), embed
// head, conf head; weights row-major.
size_t ParamCount(const EncoderParams &params);
Vec ParamsToVector(const EncoderParams &params);
void VectorToParams(const Vec &flat, EncoderParams *params);
Vec GradsToVector(const EncoderConfig &config, const EncoderGrads &grads);
// Human-readable name of one flat coordinate, e.g. "trunk[0].weight[3,7]".
std::string ParamName(const EncoderConfig &config, size_t flat_index);

}  // namespace subemb

#endif  // SUBEMB_ENCODER_H_

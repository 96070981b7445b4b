// core/src/encoder.cc

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

#include "subemb/encoder.h"

#include <cmath>

namespace subemb {

namespace {

double ApplyNonlinearity(const std::string &tag, double x) {
  if (tag == "tanh") return std::tanh(x);
  return x > 0.0 ? x : 0.0;  // relu
}

// Derivative expressed through the activation value a = phi(x).
double NonlinearityGradFromAct(const std::string &tag, double a) {
  if (tag == "tanh") return 1.0 - a * a;
  return a > 0.0 ? 1.0 : 0.0;
}

LinearLayer InitLinear(int out_dim, int in_dim, double weight_scale,
                       RngStream rng) {
  LinearLayer layer;
  layer.weight = Mat(out_dim, in_dim);
  layer.bias = Vec(out_dim, 0.0);
  const double scale = weight_scale / std::sqrt(static_cast<double>(in_dim));
  for (int r = 0; r < out_dim; ++r)
    for (int c = 0; c < in_dim; ++c) layer.weight(r, c) = scale * rng.Normal();
  return layer;
}

void LinearForward(const LinearLayer &layer, std::span<const double> x,
                   Vec *out) {
  out->assign(layer.bias.begin(), layer.bias.end());
  for (int r = 0; r < layer.weight.NumRows(); ++r)
    (*out)[r] += Dot(layer.weight.Row(r), x);
}

// Accumulates dW += dout x^T, db += dout; adds W^T dout into dx if non-null.
void LinearBackward(const LinearLayer &layer, std::span<const double> x,
                    std::span<const double> dout, LinearLayer *grad,
                    Vec *dx) {
  AddOuter(1.0, dout, x, &grad->weight);
  Axpy(1.0, dout, grad->bias);
  if (dx != nullptr) {
    Vec acc(x.size(), 0.0);
    MatTVec(layer.weight, dout, acc);
    Axpy(1.0, acc, *dx);
  }
}

LinearLayer ZeroLike(const LinearLayer &layer) {
  LinearLayer z;
  z.weight = Mat(layer.weight.NumRows(), layer.weight.NumCols());
  z.bias = Vec(layer.bias.size(), 0.0);
  return z;
}

}  // namespace

void EncoderConfig::Validate() const {
  if (input_dim < 1) throw ConfigError("EncoderConfig: input_dim must be >= 1");
  if (embedding_dim < 1)
    throw ConfigError("EncoderConfig: embedding_dim must be >= 1");
  if (group_count < 1)
    throw ConfigError("EncoderConfig: group_count must be >= 1");
  if (embedding_dim % group_count != 0)
    throw ConfigError("EncoderConfig: embedding_dim " +
                      std::to_string(embedding_dim) +
                      " not divisible by group_count " +
                      std::to_string(group_count));
  if (hidden_dims.empty())
    throw ConfigError("EncoderConfig: at least one hidden layer required");
  for (int w : hidden_dims)
    if (w < 1) throw ConfigError("EncoderConfig: hidden widths must be >= 1");
  if (nonlinearity != "tanh" && nonlinearity != "relu")
    throw ConfigError("EncoderConfig: unknown nonlinearity '" + nonlinearity +
                      "'");
  if (initial_confidence <= 0.0)
    throw ConfigError("EncoderConfig: initial_confidence must be > 0");
}

Vec ProbEmbedding::Uncertainties() const {
  Vec out(confidences.size());
  for (size_t k = 0; k < confidences.size(); ++k) out[k] = 1.0 / confidences[k];
  return out;
}

EncoderParams InitEncoder(const EncoderConfig &config, RngStream rng) {
  config.Validate();
  EncoderParams params;
  params.config = config;
  int in_dim = config.input_dim;
  for (size_t i = 0; i < config.hidden_dims.size(); ++i) {
    params.trunk.push_back(InitLinear(config.hidden_dims[i], in_dim, 1.0,
                                      rng.Derive("trunk").Derive(i)));
    in_dim = config.hidden_dims[i];
  }
  params.embed_head =
      InitLinear(config.embedding_dim, in_dim, 1.0, rng.Derive("embed-head"));
  // The confidence head starts near-constant: small weights keep the initial
  // logits close to the bias, so initial s stays near initial_confidence.
  params.conf_head =
      InitLinear(config.group_count, in_dim, 0.1, rng.Derive("conf-head"));
  const double bias = std::log(config.initial_confidence);
  for (double &b : params.conf_head.bias) b = bias;
  return params;
}

ProbEmbedding EncoderForward(const EncoderParams &params,
                             std::span<const double> x, EncoderTape *tape) {
  const EncoderConfig &cfg = params.config;
  if (static_cast<int>(x.size()) != cfg.input_dim)
    throw DimensionError("EncoderForward: input length " +
                         std::to_string(x.size()) + " != input_dim " +
                         std::to_string(cfg.input_dim));
  CheckFinite(x, "encoder input");

  EncoderTape local;
  EncoderTape &t = tape != nullptr ? *tape : local;
  t.input.assign(x.begin(), x.end());
  t.trunk_pre.resize(params.trunk.size());
  t.trunk_act.resize(params.trunk.size());

  std::span<const double> act = x;
  for (size_t i = 0; i < params.trunk.size(); ++i) {
    LinearForward(params.trunk[i], act, &t.trunk_pre[i]);
    t.trunk_act[i].resize(t.trunk_pre[i].size());
    for (size_t j = 0; j < t.trunk_pre[i].size(); ++j)
      t.trunk_act[i][j] = ApplyNonlinearity(cfg.nonlinearity, t.trunk_pre[i][j]);
    act = t.trunk_act[i];
  }

  LinearForward(params.embed_head, act, &t.embed_pre);
  LinearForward(params.conf_head, act, &t.conf_logits);

  ProbEmbedding e;
  e.group_count = cfg.group_count;
  e.group_dim = cfg.GroupDim();
  e.sub_embeddings.resize(cfg.embedding_dim);
  t.group_norms.assign(cfg.group_count, 0.0);
  for (int k = 0; k < cfg.group_count; ++k) {
    std::span<const double> raw(t.embed_pre.data() +
                                    static_cast<size_t>(k) * e.group_dim,
                                static_cast<size_t>(e.group_dim));
    const Vec unit = L2Normalize(raw);
    t.group_norms[k] = Norm(raw);
    std::copy(unit.begin(), unit.end(),
              e.sub_embeddings.begin() + static_cast<size_t>(k) * e.group_dim);
  }
  e.confidences.resize(cfg.group_count);
  for (int k = 0; k < cfg.group_count; ++k)
    e.confidences[k] = std::exp(t.conf_logits[k]);
  CheckFinite(e.confidences, "encoder confidences");
  return e;
}

EncoderGrads ZeroGradsLike(const EncoderParams &params) {
  EncoderGrads g;
  for (const LinearLayer &layer : params.trunk) g.trunk.push_back(ZeroLike(layer));
  g.embed_head = ZeroLike(params.embed_head);
  g.conf_head = ZeroLike(params.conf_head);
  return g;
}

void AccumulateGrads(const EncoderGrads &src, double scale, EncoderGrads *dst) {
  for (size_t i = 0; i < src.trunk.size(); ++i) {
    Axpy(scale, src.trunk[i].weight.Data(), dst->trunk[i].weight.Data());
    Axpy(scale, src.trunk[i].bias, dst->trunk[i].bias);
  }
  Axpy(scale, src.embed_head.weight.Data(), dst->embed_head.weight.Data());
  Axpy(scale, src.embed_head.bias, dst->embed_head.bias);
  Axpy(scale, src.conf_head.weight.Data(), dst->conf_head.weight.Data());
  Axpy(scale, src.conf_head.bias, dst->conf_head.bias);
}

void EncoderBackward(const EncoderParams &params, const EncoderTape &tape,
                     std::span<const double> grad_sub_embeddings,
                     std::span<const double> grad_confidences,
                     EncoderGrads *grads, Vec *grad_input) {
  const EncoderConfig &cfg = params.config;
  if (tape.embed_pre.empty())
    throw NumericError("EncoderBackward: missing saved activations");
  if (static_cast<int>(grad_sub_embeddings.size()) != cfg.embedding_dim ||
      static_cast<int>(grad_confidences.size()) != cfg.group_count)
    throw DimensionError("EncoderBackward: upstream gradient size mismatch");

  const int gd = cfg.GroupDim();

  // Through per-group normalization: (I - u u^T) g / ||raw||.
  Vec d_embed_pre(cfg.embedding_dim);
  for (int k = 0; k < cfg.group_count; ++k) {
    std::span<const double> raw(tape.embed_pre.data() +
                                    static_cast<size_t>(k) * gd,
                                static_cast<size_t>(gd));
    const Vec unit = L2Normalize(raw);
    std::span<const double> up(grad_sub_embeddings.data() +
                                   static_cast<size_t>(k) * gd,
                               static_cast<size_t>(gd));
    const Vec d = L2NormalizeBackward(unit, tape.group_norms[k], up);
    std::copy(d.begin(), d.end(),
              d_embed_pre.begin() + static_cast<size_t>(k) * gd);
  }

  // Through s = exp(logit): d logit = s * ds.
  Vec d_conf_logits(cfg.group_count);
  for (int k = 0; k < cfg.group_count; ++k)
    d_conf_logits[k] = std::exp(tape.conf_logits[k]) * grad_confidences[k];

  std::span<const double> last_act =
      params.trunk.empty() ? std::span<const double>(tape.input)
                           : std::span<const double>(tape.trunk_act.back());

  Vec d_act(last_act.size(), 0.0);
  LinearBackward(params.embed_head, last_act, d_embed_pre, &grads->embed_head,
                 &d_act);
  LinearBackward(params.conf_head, last_act, d_conf_logits, &grads->conf_head,
                 &d_act);

  for (int i = static_cast<int>(params.trunk.size()) - 1; i >= 0; --i) {
    Vec d_pre(d_act.size());
    for (size_t j = 0; j < d_act.size(); ++j)
      d_pre[j] = d_act[j] *
                 NonlinearityGradFromAct(cfg.nonlinearity, tape.trunk_act[i][j]);
    std::span<const double> in =
        i == 0 ? std::span<const double>(tape.input)
               : std::span<const double>(tape.trunk_act[i - 1]);
    Vec d_in(in.size(), 0.0);
    LinearBackward(params.trunk[i], in, d_pre, &grads->trunk[i], &d_in);
    d_act = std::move(d_in);
  }
  if (grad_input != nullptr) *grad_input = std::move(d_act);
}

namespace {

void AppendLayer(const LinearLayer &layer, Vec *flat) {
  flat->insert(flat->end(), layer.weight.Data().begin(),
               layer.weight.Data().end());
  flat->insert(flat->end(), layer.bias.begin(), layer.bias.end());
}

size_t ReadLayer(const Vec &flat, size_t pos, LinearLayer *layer) {
  std::copy(flat.begin() + pos,
            flat.begin() + pos + layer->weight.Data().size(),
            layer->weight.Data().begin());
  pos += layer->weight.Data().size();
  std::copy(flat.begin() + pos, flat.begin() + pos + layer->bias.size(),
            layer->bias.begin());
  return pos + layer->bias.size();
}

size_t LayerSize(const LinearLayer &layer) {
  return layer.weight.Data().size() + layer.bias.size();
}

}  // namespace

size_t ParamCount(const EncoderParams &params) {
  size_t n = 0;
  for (const LinearLayer &layer : params.trunk) n += LayerSize(layer);
  return n + LayerSize(params.embed_head) + LayerSize(params.conf_head);
}

Vec ParamsToVector(const EncoderParams &params) {
  Vec flat;
  flat.reserve(ParamCount(params));
  for (const LinearLayer &layer : params.trunk) AppendLayer(layer, &flat);
  AppendLayer(params.embed_head, &flat);
  AppendLayer(params.conf_head, &flat);
  return flat;
}

void VectorToParams(const Vec &flat, EncoderParams *params) {
  if (flat.size() != ParamCount(*params))
    throw DimensionError("VectorToParams: flat size mismatch");
  size_t pos = 0;
  for (LinearLayer &layer : params->trunk) pos = ReadLayer(flat, pos, &layer);
  pos = ReadLayer(flat, pos, &params->embed_head);
  ReadLayer(flat, pos, &params->conf_head);
}

Vec GradsToVector(const EncoderConfig &config, const EncoderGrads &grads) {
  (void)config;
  Vec flat;
  for (const LinearLayer &layer : grads.trunk) AppendLayer(layer, &flat);
  AppendLayer(grads.embed_head, &flat);
  AppendLayer(grads.conf_head, &flat);
  return flat;
}

std::string ParamName(const EncoderConfig &config, size_t flat_index) {
  struct Block {
    std::string name;
    int rows, cols;  // cols == 0 means bias vector of length rows
  };
  std::vector<Block> blocks;
  int in_dim = config.input_dim;
  for (size_t i = 0; i < config.hidden_dims.size(); ++i) {
    const std::string base = "trunk[" + std::to_string(i) + "]";
    blocks.push_back({base + ".weight", config.hidden_dims[i], in_dim});
    blocks.push_back({base + ".bias", config.hidden_dims[i], 0});
    in_dim = config.hidden_dims[i];
  }
  blocks.push_back({"embed_head.weight", config.embedding_dim, in_dim});
  blocks.push_back({"embed_head.bias", config.embedding_dim, 0});
  blocks.push_back({"conf_head.weight", config.group_count, in_dim});
  blocks.push_back({"conf_head.bias", config.group_count, 0});

  size_t pos = 0;
  for (const Block &b : blocks) {
    const size_t n = b.cols == 0
                         ? static_cast<size_t>(b.rows)
                         : static_cast<size_t>(b.rows) * b.cols;
    if (flat_index < pos + n) {
      const size_t local = flat_index - pos;
      if (b.cols == 0) return b.name + "[" + std::to_string(local) + "]";
      return b.name + "[" + std::to_string(local / b.cols) + "," +
             std::to_string(local % b.cols) + "]";
    }
    pos += n;
  }
  return "out-of-range";
}

}  // namespace subemb

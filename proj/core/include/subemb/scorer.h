// subemb/scorer.h

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

#ifndef SUBEMB_SCORER_H_
#define SUBEMB_SCORER_H_

#include <string>
#include <vector>

#include "subemb/encoder.h"

namespace subemb {

enum class ScoreMethod { kMls, kCosine };

const char *ScoreMethodTag(ScoreMethod method);  // "mls" | "cosine"

struct PairScore {
  double value = 0.0;
  ScoreMethod method = ScoreMethod::kCosine;
};

// Uncertainty-weighted mutual-likelihood similarity:
//   -1/2 sum_k ||f_a^(k) - f_b^(k)||^2 / (sigma_a^(k)2 + sigma_b^(k)2)
//   - (D / 2K) sum_k log(sigma_a^(k)2 + sigma_b^(k)2)
// with sigma^2 = 1/s floored at 1e-6. D is the full embedding dimension.
// Exactly symmetric in its arguments.
PairScore PairScoreMls(const ProbEmbedding &a, const ProbEmbedding &b,
                       int embedding_dim);

// Plain averaged per-group cosine, the baseline the uncertainty-weighted
// score improves on.
PairScore PairScoreCosine(const ProbEmbedding &a, const ProbEmbedding &b);

// Precision-weighted fusion of a template (all embeddings of one subject):
// per group, direction = normalize(sum_m s_m f_m), confidence = sum_m s_m.
ProbEmbedding FuseTemplate(const std::vector<const ProbEmbedding *> &members);
ProbEmbedding FuseTemplate(const std::vector<ProbEmbedding> &members);

// Embedding export: one record per sample (id, K, D, sub-embedding values,
// sigma^2 values) in CSV or packed little-endian binary. sigma^2 is the
// stored quantity; it round-trips bit-exactly through the binary format.
struct EmbeddingRecord {
  int64_t id = 0;
  ProbEmbedding embedding;  // confidences = 1 / sigma_sq, for scoring
  Vec sigma_sq;             // one per group, as written to disk
};

EmbeddingRecord MakeEmbeddingRecord(int64_t id, const ProbEmbedding &e);

void WriteEmbeddingsCsv(const std::string &path,
                        const std::vector<EmbeddingRecord> &records);
std::vector<EmbeddingRecord> ReadEmbeddingsCsv(const std::string &path);
void WriteEmbeddingsBinary(const std::string &path,
                           const std::vector<EmbeddingRecord> &records);
std::vector<EmbeddingRecord> ReadEmbeddingsBinary(const std::string &path);

}  // namespace subemb

#endif  // SUBEMB_SCORER_H_

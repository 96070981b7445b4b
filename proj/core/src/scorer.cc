// core/src/scorer.cc

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

#include "subemb/scorer.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "subemb/serialize_util.h"

namespace subemb {

namespace {

constexpr double kSigmaSqFloor = 1e-6;

void CheckSameShape(const ProbEmbedding &a, const ProbEmbedding &b) {
  if (a.group_count != b.group_count || a.group_dim != b.group_dim)
    throw DimensionError("pair score: embedding partition mismatch (K " +
                         std::to_string(a.group_count) + " vs " +
                         std::to_string(b.group_count) + ")");
}

double SigmaSq(double confidence) {
  return std::max(1.0 / confidence, kSigmaSqFloor);
}

}  // namespace

EmbeddingRecord MakeEmbeddingRecord(int64_t id, const ProbEmbedding &e) {
  EmbeddingRecord rec;
  rec.id = id;
  rec.embedding = e;
  rec.sigma_sq = e.Uncertainties();
  return rec;
}

const char *ScoreMethodTag(ScoreMethod method) {
  return method == ScoreMethod::kMls ? "mls" : "cosine";
}

PairScore PairScoreMls(const ProbEmbedding &a, const ProbEmbedding &b,
                       int embedding_dim) {
  CheckSameShape(a, b);
  const int K = a.group_count;
  double dist_term = 0.0;
  double log_term = 0.0;
  for (int k = 0; k < K; ++k) {
    const double var = SigmaSq(a.confidences[k]) + SigmaSq(b.confidences[k]);
    dist_term += SquaredDistance(a.Group(k), b.Group(k)) / var;
    log_term += std::log(var);
  }
  PairScore score;
  score.method = ScoreMethod::kMls;
  score.value = -0.5 * dist_term -
                (static_cast<double>(embedding_dim) / (2.0 * K)) * log_term;
  CheckFinite(score.value, "mls pair score");
  return score;
}

PairScore PairScoreCosine(const ProbEmbedding &a, const ProbEmbedding &b) {
  CheckSameShape(a, b);
  double acc = 0.0;
  for (int k = 0; k < a.group_count; ++k) acc += Dot(a.Group(k), b.Group(k));
  PairScore score;
  score.method = ScoreMethod::kCosine;
  score.value = acc / a.group_count;
  return score;
}

ProbEmbedding FuseTemplate(const std::vector<const ProbEmbedding *> &members) {
  if (members.empty()) throw ConfigError("FuseTemplate: empty template");
  const ProbEmbedding &first = *members[0];
  for (const ProbEmbedding *m : members) CheckSameShape(first, *m);

  ProbEmbedding fused;
  fused.group_count = first.group_count;
  fused.group_dim = first.group_dim;
  fused.sub_embeddings.assign(first.Dim(), 0.0);
  fused.confidences.assign(first.group_count, 0.0);
  for (int k = 0; k < first.group_count; ++k) {
    Vec acc(first.group_dim, 0.0);
    double total_s = 0.0;
    for (const ProbEmbedding *m : members) {
      const double s = m->confidences[k];
      Axpy(s, m->Group(k), acc);
      total_s += s;
    }
    const Vec unit = L2Normalize(acc);
    std::copy(unit.begin(), unit.end(),
              fused.sub_embeddings.begin() +
                  static_cast<size_t>(k) * first.group_dim);
    fused.confidences[k] = total_s;
  }
  return fused;
}

ProbEmbedding FuseTemplate(const std::vector<ProbEmbedding> &members) {
  std::vector<const ProbEmbedding *> ptrs;
  ptrs.reserve(members.size());
  for (const ProbEmbedding &m : members) ptrs.push_back(&m);
  return FuseTemplate(ptrs);
}

void WriteEmbeddingsCsv(const std::string &path,
                        const std::vector<EmbeddingRecord> &records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  char buf[32];
  for (const EmbeddingRecord &rec : records) {
    const ProbEmbedding &e = rec.embedding;
    out << rec.id << ',' << e.group_count << ',' << e.Dim();
    for (double v : e.sub_embeddings) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    for (double v : rec.sigma_sq) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<EmbeddingRecord> ReadEmbeddingsCsv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<EmbeddingRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char *p = line.c_str();
    char *end = nullptr;
    auto next = [&]() -> double {
      const double v = std::strtod(p, &end);
      if (end == p)
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": malformed embedding record");
      p = *end == ',' ? end + 1 : end;
      return v;
    };
    EmbeddingRecord rec;
    rec.id = static_cast<int64_t>(next());
    const int k = static_cast<int>(next());
    const int dim = static_cast<int>(next());
    if (k < 1 || dim < 1 || dim % k != 0)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": inconsistent K/D fields");
    rec.embedding.group_count = k;
    rec.embedding.group_dim = dim / k;
    rec.embedding.sub_embeddings.resize(dim);
    for (int d = 0; d < dim; ++d) rec.embedding.sub_embeddings[d] = next();
    rec.sigma_sq.resize(k);
    for (int g = 0; g < k; ++g) rec.sigma_sq[g] = next();
    rec.embedding.confidences.resize(k);
    for (int g = 0; g < k; ++g)
      rec.embedding.confidences[g] = 1.0 / rec.sigma_sq[g];
    records.push_back(std::move(rec));
  }
  return records;
}

void WriteEmbeddingsBinary(const std::string &path,
                           const std::vector<EmbeddingRecord> &records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.write("SEMBEMB1", 8);
  WriteU64(out, records.size());
  for (const EmbeddingRecord &rec : records) {
    const ProbEmbedding &e = rec.embedding;
    WriteU64(out, static_cast<uint64_t>(rec.id));
    WriteU64(out, static_cast<uint64_t>(e.group_count));
    WriteU64(out, static_cast<uint64_t>(e.Dim()));
    for (double v : e.sub_embeddings) WriteF64(out, v);
    for (double v : rec.sigma_sq) WriteF64(out, v);
  }
}

std::vector<EmbeddingRecord> ReadEmbeddingsBinary(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  char magic[8] = {};
  in.read(magic, 8);
  if (std::string(magic, 8) != "SEMBEMB1")
    throw ConfigError(path + ": not an embedding file");
  const uint64_t count = ReadU64(in);
  std::vector<EmbeddingRecord> records(count);
  for (uint64_t i = 0; i < count; ++i) {
    records[i].id = static_cast<int64_t>(ReadU64(in));
    const int k = static_cast<int>(ReadU64(in));
    const int dim = static_cast<int>(ReadU64(in));
    if (k < 1 || dim < 1 || dim % k != 0)
      throw ConfigError(path + ": corrupt embedding record");
    ProbEmbedding &e = records[i].embedding;
    e.group_count = k;
    e.group_dim = dim / k;
    e.sub_embeddings.resize(dim);
    for (int d = 0; d < dim; ++d) e.sub_embeddings[d] = ReadF64(in);
    records[i].sigma_sq.resize(k);
    for (int g = 0; g < k; ++g) records[i].sigma_sq[g] = ReadF64(in);
    e.confidences.resize(k);
    for (int g = 0; g < k; ++g) e.confidences[g] = 1.0 / records[i].sigma_sq[g];
  }
  if (!in) throw ConfigError("truncated embedding file " + path);
  return records;
}

}  // namespace subemb

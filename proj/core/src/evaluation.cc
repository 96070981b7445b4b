// core/src/evaluation.cc

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

#include "subemb/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "subemb/parallel.h"

namespace subemb {

using nlohmann::json;

namespace {

double FractionAtLeast(const std::vector<double> &sorted_scores,
                       double threshold) {
  // sorted ascending; count of entries >= threshold.
  const auto it = std::lower_bound(sorted_scores.begin(), sorted_scores.end(),
                                   threshold);
  return static_cast<double>(sorted_scores.end() - it) / sorted_scores.size();
}

}  // namespace

std::vector<double> TarAtFar(const std::vector<double> &genuine,
                             const std::vector<double> &impostor,
                             const std::vector<double> &far_targets) {
  if (genuine.empty() || impostor.empty())
    throw ConfigError("TarAtFar: empty score list");
  std::vector<double> sorted_gen = genuine;
  std::vector<double> sorted_imp = impostor;
  std::sort(sorted_gen.begin(), sorted_gen.end());
  std::sort(sorted_imp.begin(), sorted_imp.end());

  std::vector<double> out;
  out.reserve(far_targets.size());
  for (double target : far_targets) {
    // Candidate thresholds: the impostor scores themselves plus -inf.
    // Empirical FAR is non-increasing in the threshold, so the smallest
    // candidate meeting FAR <= target is found by scanning ascending.
    double threshold = -std::numeric_limits<double>::infinity();
    bool found = 1.0 <= target;  // -inf accepts everything, FAR = 1
    if (!found) {
      for (double cand : sorted_imp) {
        if (FractionAtLeast(sorted_imp, cand) <= target) {
          threshold = cand;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      // No threshold admits the target; everything is rejected.
      out.push_back(0.0);
      continue;
    }
    out.push_back(FractionAtLeast(sorted_gen, threshold));
  }
  return out;
}

std::vector<RocPoint> RocCurve(const std::vector<double> &genuine,
                               const std::vector<double> &impostor,
                               int max_points) {
  if (genuine.empty() || impostor.empty())
    throw ConfigError("RocCurve: empty score list");
  std::vector<double> sorted_gen = genuine;
  std::vector<double> sorted_imp = impostor;
  std::sort(sorted_gen.begin(), sorted_gen.end());
  std::sort(sorted_imp.begin(), sorted_imp.end());

  const int n = static_cast<int>(sorted_imp.size());
  const int points = std::min(std::max(max_points, 2), n);
  std::vector<RocPoint> roc;
  roc.reserve(points + 1);
  // Thresholds at impostor-score quantiles, descending FAR as threshold grows.
  for (int i = 0; i < points; ++i) {
    const int idx = static_cast<int>(
        (static_cast<int64_t>(i) * (n - 1)) / std::max(points - 1, 1));
    const double threshold = sorted_imp[idx];
    roc.push_back({FractionAtLeast(sorted_imp, threshold),
                   FractionAtLeast(sorted_gen, threshold)});
  }
  std::sort(roc.begin(), roc.end(), [](const RocPoint &a, const RocPoint &b) {
    return a.far < b.far;
  });
  return roc;
}

std::vector<double> RankK(const Mat &scores,
                          const std::vector<int> &probe_labels,
                          const std::vector<int> &gallery_labels,
                          const std::vector<int> &k_values) {
  const int n_probes = scores.NumRows();
  const int n_gallery = scores.NumCols();
  if (static_cast<int>(probe_labels.size()) != n_probes ||
      static_cast<int>(gallery_labels.size()) != n_gallery)
    throw DimensionError("RankK: label/score shape mismatch");
  {
    std::map<int, int> seen;
    for (int g : gallery_labels)
      if (++seen[g] > 1) throw ConfigError("RankK: duplicate gallery label");
  }

  std::vector<double> hits(k_values.size(), 0.0);
  for (int p = 0; p < n_probes; ++p) {
    int true_gallery = -1;
    for (int g = 0; g < n_gallery; ++g)
      if (gallery_labels[g] == probe_labels[p]) true_gallery = g;
    if (true_gallery < 0)
      throw ConfigError("RankK: probe identity " +
                        std::to_string(probe_labels[p]) +
                        " absent from gallery (closed-set)");
    // Rank of the true gallery: number of entries strictly better, ties
    // resolved by gallery index order.
    const double true_score = scores(p, true_gallery);
    int rank = 1;
    for (int g = 0; g < n_gallery; ++g) {
      if (g == true_gallery) continue;
      if (scores(p, g) > true_score ||
          (scores(p, g) == true_score && g < true_gallery))
        ++rank;
    }
    for (size_t i = 0; i < k_values.size(); ++i)
      if (rank <= k_values[i]) hits[i] += 1.0;
  }
  for (double &h : hits) h /= n_probes;
  return hits;
}

std::vector<double> TpirAtFpir(const std::vector<MatedProbe> &mated,
                               const std::vector<double> &nonmated_top_scores,
                               const std::vector<double> &fpir_targets) {
  if (nonmated_top_scores.empty())
    throw ConfigError("TpirAtFpir: empty nonmated set");
  if (mated.empty()) throw ConfigError("TpirAtFpir: empty mated set");

  std::vector<double> sorted_nonmated = nonmated_top_scores;
  std::sort(sorted_nonmated.begin(), sorted_nonmated.end());

  // Candidate thresholds: every observed score plus -inf, so a fully
  // separable problem can reach FPIR 0 with all mated probes accepted.
  std::vector<double> candidates;
  candidates.reserve(mated.size() + sorted_nonmated.size());
  for (const MatedProbe &m : mated) candidates.push_back(m.top_score);
  candidates.insert(candidates.end(), sorted_nonmated.begin(),
                    sorted_nonmated.end());
  std::sort(candidates.begin(), candidates.end());

  std::vector<double> out;
  out.reserve(fpir_targets.size());
  for (double target : fpir_targets) {
    double threshold = -std::numeric_limits<double>::infinity();
    bool found = 1.0 <= target;
    if (!found) {
      for (double cand : candidates) {
        if (FractionAtLeast(sorted_nonmated, cand) <= target) {
          threshold = cand;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      out.push_back(0.0);
      continue;
    }
    double tpir = 0.0;
    for (const MatedProbe &m : mated)
      if (m.rank1_correct && m.top_score >= threshold) tpir += 1.0;
    out.push_back(tpir / mated.size());
  }
  return out;
}

Mat SubembeddingCorrelation(const std::vector<ProbEmbedding> &embeddings,
                            const std::vector<int> &labels,
                            std::vector<int> *degenerate_groups) {
  if (embeddings.size() != labels.size())
    throw DimensionError("SubembeddingCorrelation: label count mismatch");
  if (embeddings.empty())
    throw ConfigError("SubembeddingCorrelation: no embeddings");
  const int K = embeddings[0].group_count;
  const int gd = embeddings[0].group_dim;
  const int n = static_cast<int>(embeddings.size());

  // Class means of the normalized sub-embeddings.
  std::map<int, std::pair<Vec, int>> classes;  // label -> (sum, count)
  for (int i = 0; i < n; ++i) {
    auto &entry = classes[labels[i]];
    if (entry.second == 0) entry.first.assign(embeddings[i].Dim(), 0.0);
    Axpy(1.0, embeddings[i].sub_embeddings, entry.first);
    entry.second += 1;
  }
  int usable_classes = 0;
  for (auto &[label, entry] : classes) {
    if (entry.second >= 2) ++usable_classes;
    Scale(1.0 / entry.second, entry.first);
  }
  if (usable_classes < 2 || classes.size() < 2)
    throw ConfigError(
        "SubembeddingCorrelation: need >= 2 samples per class for >= 2 "
        "classes");

  // Per-sample, per-group distance to the class center.
  Mat dist(n, K);
  for (int i = 0; i < n; ++i) {
    const Vec &center = classes[labels[i]].first;
    for (int k = 0; k < K; ++k) {
      std::span<const double> c(center.data() + static_cast<size_t>(k) * gd,
                                static_cast<size_t>(gd));
      dist(i, k) = std::sqrt(SquaredDistance(embeddings[i].Group(k), c));
    }
  }

  // Pearson correlation across samples.
  Vec mean(K, 0.0), var(K, 0.0);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) mean[k] += dist(i, k);
    mean[k] /= n;
    for (int i = 0; i < n; ++i) {
      const double d = dist(i, k) - mean[k];
      var[k] += d * d;
    }
  }

  constexpr double kVarFloor = 1e-24;
  std::vector<int> degenerate;
  for (int k = 0; k < K; ++k)
    if (var[k] < kVarFloor) degenerate.push_back(k);

  Mat corr(K, K);
  for (int a = 0; a < K; ++a) {
    corr(a, a) = 1.0;
    for (int b = a + 1; b < K; ++b) {
      const bool bad = var[a] < kVarFloor || var[b] < kVarFloor;
      double value = 0.0;
      if (!bad) {
        double cov = 0.0;
        for (int i = 0; i < n; ++i)
          cov += (dist(i, a) - mean[a]) * (dist(i, b) - mean[b]);
        value = cov / std::sqrt(var[a] * var[b]);
      }
      corr(a, b) = value;
      corr(b, a) = value;
    }
  }
  if (degenerate_groups != nullptr) *degenerate_groups = std::move(degenerate);
  return corr;
}

double MeanAbsOffDiagonal(const Mat &corr,
                          const std::vector<int> &degenerate_groups) {
  const int K = corr.NumRows();
  std::vector<bool> skip(K, false);
  for (int k : degenerate_groups) skip[k] = true;
  double acc = 0.0;
  int count = 0;
  for (int a = 0; a < K; ++a) {
    if (skip[a]) continue;
    for (int b = 0; b < K; ++b) {
      if (b == a || skip[b]) continue;
      acc += std::fabs(corr(a, b));
      ++count;
    }
  }
  return count == 0 ? 0.0 : acc / count;
}

std::vector<ProbEmbedding> EmbedSamples(
    const ModelBundle &bundle, const std::vector<VariationSample> &samples,
    int threads) {
  std::vector<ProbEmbedding> out(samples.size());
  ParallelFor(static_cast<int>(samples.size()), threads, [&](int i) {
    out[i] = EmbedObservation(bundle, samples[i].x);
  });
  return out;
}

namespace {

double ScorePair(const ProbEmbedding &a, const ProbEmbedding &b,
                 ScoreMethod method, int embedding_dim) {
  return method == ScoreMethod::kMls ? PairScoreMls(a, b, embedding_dim).value
                                     : PairScoreCosine(a, b).value;
}

bool IsCorrupted(const VariationSample &s) {
  for (int t = 0; t < kAugmentableVariations &&
                  t < static_cast<int>(s.u.size());
       ++t)
    if (s.u[t] == 0) return true;
  return false;
}

bool IsClean(const VariationSample &s) { return !IsCorrupted(s); }

}  // namespace

EvalReport EvaluateModel(const ModelBundle &bundle,
                         const std::vector<VariationSample> &samples,
                         const EvalProtocolConfig &config) {
  if (samples.empty()) throw ConfigError("EvaluateModel: no samples");
  const int D = bundle.encoder.config.embedding_dim;
  const std::vector<ProbEmbedding> embeddings =
      EmbedSamples(bundle, samples, config.threads);
  const int n = static_cast<int>(samples.size());

  EvalReport report;
  report.score_method = ScoreMethodTag(config.method);

  // ---- Verification: all pairs, slot-indexed so results do not depend on
  // the thread count.
  struct PairEntry {
    int i, j;
  };
  std::vector<PairEntry> pairs;
  pairs.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
  std::vector<double> pair_scores(pairs.size());
  ParallelFor(static_cast<int>(pairs.size()), config.threads, [&](int p) {
    pair_scores[p] = ScorePair(embeddings[pairs[p].i], embeddings[pairs[p].j],
                               config.method, D);
  });

  std::vector<double> genuine, impostor, genuine_cor, impostor_cor;
  for (size_t p = 0; p < pairs.size(); ++p) {
    const bool same =
        samples[pairs[p].i].identity == samples[pairs[p].j].identity;
    (same ? genuine : impostor).push_back(pair_scores[p]);
    if (IsCorrupted(samples[pairs[p].i]) || IsCorrupted(samples[pairs[p].j]))
      (same ? genuine_cor : impostor_cor).push_back(pair_scores[p]);
  }
  report.n_genuine_pairs = static_cast<int>(genuine.size());
  report.n_impostor_pairs = static_cast<int>(impostor.size());

  const std::vector<double> tars =
      TarAtFar(genuine, impostor, config.far_targets);
  for (size_t i = 0; i < config.far_targets.size(); ++i)
    report.tar_at_far.emplace_back(config.far_targets[i], tars[i]);
  if (!genuine_cor.empty() && !impostor_cor.empty()) {
    const std::vector<double> tars_cor =
        TarAtFar(genuine_cor, impostor_cor, config.far_targets);
    for (size_t i = 0; i < config.far_targets.size(); ++i)
      report.tar_at_far_corrupted.emplace_back(config.far_targets[i],
                                               tars_cor[i]);
  }
  report.roc = RocCurve(genuine, impostor);

  // ---- Identification. Gallery templates fuse up to gallery_size clean
  // samples per identity (first samples as fallback when none are clean);
  // every other sample is a probe.
  std::map<int, std::vector<int>> by_id;
  for (int i = 0; i < n; ++i) by_id[samples[i].identity].push_back(i);

  std::vector<int> gallery_ids;
  std::vector<ProbEmbedding> gallery_templates;
  std::vector<bool> in_gallery(n, false);
  for (const auto &[id, members] : by_id) {
    std::vector<const ProbEmbedding *> chosen;
    for (int idx : members) {
      if (static_cast<int>(chosen.size()) >= config.gallery_size) break;
      if (IsClean(samples[idx])) {
        chosen.push_back(&embeddings[idx]);
        in_gallery[idx] = true;
      }
    }
    if (chosen.empty()) {
      chosen.push_back(&embeddings[members.front()]);
      in_gallery[members.front()] = true;
    }
    gallery_ids.push_back(id);
    gallery_templates.push_back(FuseTemplate(chosen));
  }

  std::vector<int> probe_idx;
  for (int i = 0; i < n; ++i)
    if (!in_gallery[i]) probe_idx.push_back(i);

  if (!probe_idx.empty()) {
    const int n_probes = static_cast<int>(probe_idx.size());
    const int n_gallery = static_cast<int>(gallery_ids.size());
    Mat scores(n_probes, n_gallery);
    ParallelFor(n_probes, config.threads, [&](int p) {
      for (int g = 0; g < n_gallery; ++g)
        scores(p, g) = ScorePair(embeddings[probe_idx[p]],
                                 gallery_templates[g], config.method, D);
    });
    std::vector<int> probe_labels(n_probes);
    for (int p = 0; p < n_probes; ++p)
      probe_labels[p] = samples[probe_idx[p]].identity;

    const std::vector<double> ranks =
        RankK(scores, probe_labels, gallery_ids, config.rank_values);
    for (size_t i = 0; i < config.rank_values.size(); ++i)
      report.rank_accuracy.emplace_back(config.rank_values[i], ranks[i]);

    // ---- Open set: drop the second half of the gallery; probes of dropped
    // identities become nonmated.
    const int kept = (n_gallery + 1) / 2;
    if (kept >= 1 && kept < n_gallery) {
      std::vector<MatedProbe> mated;
      std::vector<double> nonmated;
      for (int p = 0; p < n_probes; ++p) {
        int best_g = 0;
        for (int g = 1; g < kept; ++g)
          if (scores(p, g) > scores(p, best_g)) best_g = g;
        bool is_mated = false;
        for (int g = 0; g < kept; ++g)
          if (gallery_ids[g] == probe_labels[p]) is_mated = true;
        if (is_mated)
          mated.push_back(
              {scores(p, best_g), gallery_ids[best_g] == probe_labels[p]});
        else
          nonmated.push_back(scores(p, best_g));
      }
      if (!mated.empty() && !nonmated.empty()) {
        const std::vector<double> tpirs =
            TpirAtFpir(mated, nonmated, config.fpir_targets);
        for (size_t i = 0; i < config.fpir_targets.size(); ++i)
          report.tpir_at_fpir.emplace_back(config.fpir_targets[i], tpirs[i]);
      }
    }
  }

  // ---- Sub-embedding correlation on this sample set.
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = samples[i].identity;
  report.correlation =
      SubembeddingCorrelation(embeddings, labels, &report.degenerate_groups);
  report.mean_abs_offdiag =
      MeanAbsOffDiagonal(report.correlation, report.degenerate_groups);
  return report;
}

std::string EvalReport::ToJsonString() const {
  json j;
  j["score_method"] = score_method;
  j["n_genuine_pairs"] = n_genuine_pairs;
  j["n_impostor_pairs"] = n_impostor_pairs;
  json tar = json::array();
  for (const auto &[far, value] : tar_at_far)
    tar.push_back({{"far", far}, {"tar", value}});
  j["tar_at_far"] = tar;
  json tarc = json::array();
  for (const auto &[far, value] : tar_at_far_corrupted)
    tarc.push_back({{"far", far}, {"tar", value}});
  j["tar_at_far_corrupted"] = tarc;
  json rank = json::array();
  for (const auto &[k, value] : rank_accuracy)
    rank.push_back({{"k", k}, {"accuracy", value}});
  j["rank_accuracy"] = rank;
  json tpir = json::array();
  for (const auto &[fpir, value] : tpir_at_fpir)
    tpir.push_back({{"fpir", fpir}, {"tpir", value}});
  j["tpir_at_fpir"] = tpir;
  json corr = json::array();
  for (int a = 0; a < correlation.NumRows(); ++a) {
    json row = json::array();
    for (int b = 0; b < correlation.NumCols(); ++b)
      row.push_back(correlation(a, b));
    corr.push_back(row);
  }
  j["correlation"] = corr;
  j["degenerate_groups"] = degenerate_groups;
  j["mean_abs_offdiag"] = mean_abs_offdiag;
  json roc_json = json::array();
  for (const RocPoint &p : roc)
    roc_json.push_back({{"far", p.far}, {"tar", p.tar}});
  j["roc"] = roc_json;
  return j.dump(2);
}

void EvalReport::WriteRocCsv(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "far,tar\n";
  char buf[64];
  for (const RocPoint &p : roc) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.far, p.tar);
    out << buf;
  }
}

std::vector<SweepRow> SweepGroupCount(const Dataset &dataset,
                                      const TrainConfig &base_config,
                                      const std::vector<int> &k_values,
                                      const EvalProtocolConfig &eval_config) {
  std::vector<SweepRow> rows;
  for (int k : k_values) {
    if (k < 1 || base_config.embedding_dim % k != 0)
      throw ConfigError("SweepGroupCount: K=" + std::to_string(k) +
                        " does not divide embedding_dim " +
                        std::to_string(base_config.embedding_dim));
    TrainConfig cfg = base_config;
    cfg.group_count = k;
    cfg.ablation.multiple_embeddings = true;
    // Decorrelation needs enough distinct masks; fall back to plain training
    // for K too small and mark the row.
    bool de = cfg.ablation.decorrelation;
    if (de) {
      try {
        GenerateMasks(k, dataset.NumVariations(), RngStream(0, "probe"));
      } catch (const ConfigError &) {
        de = false;
      }
    }
    cfg.ablation.decorrelation = de;

    const ModelBundle bundle = Train(dataset, cfg);
    const EvalReport report =
        EvaluateModel(bundle, dataset.test, eval_config);

    SweepRow row;
    row.group_count = k;
    row.group_dim = base_config.embedding_dim / k;
    row.decorrelation_enabled = de;
    row.tar_at_far = report.tar_at_far;
    for (const auto &[rank, acc] : report.rank_accuracy)
      if (rank == 1) row.rank1 = acc;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string SweepTableCsv(const std::vector<SweepRow> &rows,
                          const std::vector<double> &far_targets) {
  std::ostringstream out;
  out << "k,group_dim,decorrelation";
  for (double far : far_targets) {
    char buf[48];
    std::snprintf(buf, sizeof buf, ",tar_at_far_%g", far);
    out << buf;
  }
  out << ",rank1\n";
  for (const SweepRow &row : rows) {
    out << row.group_count << ',' << row.group_dim << ','
        << (row.decorrelation_enabled ? 1 : 0);
    char buf[48];
    for (const auto &[far, tar] : row.tar_at_far) {
      std::snprintf(buf, sizeof buf, ",%.6f", tar);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f\n", row.rank1);
    out << buf;
  }
  return out.str();
}

}  // namespace subemb

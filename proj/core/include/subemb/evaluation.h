// subemb/evaluation.h

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

#ifndef SUBEMB_EVALUATION_H_
#define SUBEMB_EVALUATION_H_

#include <string>
#include <vector>

#include "subemb/encoder.h"
#include "subemb/scorer.h"
#include "subemb/trainer.h"

namespace subemb {

struct RocPoint {
  double far = 0.0;
  double tar = 0.0;
};

// Verification: accept when score >= threshold. The threshold for a FAR
// target is the smallest candidate (impostor scores plus -inf) whose
// empirical FAR does not exceed the target; no interpolation.
std::vector<double> TarAtFar(const std::vector<double> &genuine,
                             const std::vector<double> &impostor,
                             const std::vector<double> &far_targets);

// ROC sampled at up to `max_points` impostor-score thresholds.
std::vector<RocPoint> RocCurve(const std::vector<double> &genuine,
                               const std::vector<double> &impostor,
                               int max_points = 200);

// Closed-set identification. scores(p, g) is probe p against gallery
// template g; ties broken by gallery index order. Every probe label must
// appear among the gallery labels.
std::vector<double> RankK(const Mat &scores,
                          const std::vector<int> &probe_labels,
                          const std::vector<int> &gallery_labels,
                          const std::vector<int> &k_values);

// Open-set identification. A mated probe counts at a threshold if its top
// gallery score passes the threshold and the top match is the correct
// identity; the threshold is the smallest candidate (all observed scores
// plus -inf) whose nonmated pass rate does not exceed the FPIR target.
struct MatedProbe {
  double top_score = 0.0;
  bool rank1_correct = false;
};

std::vector<double> TpirAtFpir(const std::vector<MatedProbe> &mated,
                               const std::vector<double> &nonmated_top_scores,
                               const std::vector<double> &fpir_targets);

// Per-group distance-to-class-center correlation. For each sample, the K
// distances between its sub-embeddings and the class-mean sub-embeddings are
// treated as K variables; the result is their Pearson correlation matrix.
// Groups with (numerically) zero distance variance are listed in
// `degenerate_groups` and their off-diagonal entries set to zero instead of
// propagating NaN.
Mat SubembeddingCorrelation(const std::vector<ProbEmbedding> &embeddings,
                            const std::vector<int> &labels,
                            std::vector<int> *degenerate_groups = nullptr);

double MeanAbsOffDiagonal(const Mat &corr,
                          const std::vector<int> &degenerate_groups = {});

struct EvalProtocolConfig {
  std::vector<double> far_targets = {1e-2, 1e-3};
  std::vector<int> rank_values = {1, 5};
  std::vector<double> fpir_targets = {1e-2, 1e-1};
  ScoreMethod method = ScoreMethod::kCosine;
  int gallery_size = 3;  // clean samples fused per gallery template
  int threads = 1;
};

struct EvalReport {
  std::string score_method;
  std::vector<RocPoint> roc;
  std::vector<std::pair<double, double>> tar_at_far;            // (far, tar)
  std::vector<std::pair<double, double>> tar_at_far_corrupted;  // subset
  std::vector<std::pair<int, double>> rank_accuracy;
  std::vector<std::pair<double, double>> tpir_at_fpir;
  Mat correlation;
  std::vector<int> degenerate_groups;
  double mean_abs_offdiag = 0.0;
  int n_genuine_pairs = 0;
  int n_impostor_pairs = 0;

  std::string ToJsonString() const;
  void WriteRocCsv(const std::string &path) const;
};

// Embeds every sample with the bundle's encoder (honoring the shared-constant
// confidence mode when confidence-aware training was disabled).
std::vector<ProbEmbedding> EmbedSamples(
    const ModelBundle &bundle, const std::vector<VariationSample> &samples,
    int threads = 1);

// Full protocol over a labeled sample set: verification over all pairs (and
// over pairs with at least one corrupted member), closed-set rank-k with
// fused clean-sample gallery templates, open-set TPIR with half the
// identities removed from the gallery, and the sub-embedding correlation.
EvalReport EvaluateModel(const ModelBundle &bundle,
                         const std::vector<VariationSample> &samples,
                         const EvalProtocolConfig &config);

struct SweepRow {
  int group_count = 0;
  int group_dim = 0;
  bool decorrelation_enabled = false;
  std::vector<std::pair<double, double>> tar_at_far;
  double rank1 = 0.0;
};

// Trains and evaluates one model per K (shared seed) and tabulates the
// verification/identification numbers. K values must divide the embedding
// dimension. When the mask set is infeasible for a K (too few distinct
// masks), decorrelation is disabled for that row and flagged in the output.
std::vector<SweepRow> SweepGroupCount(const Dataset &dataset,
                                      const TrainConfig &base_config,
                                      const std::vector<int> &k_values,
                                      const EvalProtocolConfig &eval_config);

std::string SweepTableCsv(const std::vector<SweepRow> &rows,
                          const std::vector<double> &far_targets);

}  // namespace subemb

#endif  // SUBEMB_EVALUATION_H_

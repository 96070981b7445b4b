// subemb/synthdata.h

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

#ifndef SUBEMB_SYNTHDATA_H_
#define SUBEMB_SYNTHDATA_H_

#include <array>
#include <string>
#include <vector>

#include "subemb/numerics.h"
#include "subemb/rng.h"

namespace subemb {

// Three augmentable corruption axes: smoothing, block occlusion, in-plane
// rotation. Each destroys information along one nameable direction.
constexpr int kAugmentableVariations = 3;
constexpr int kBlurVariation = 0;
constexpr int kOccludeVariation = 1;
constexpr int kPoseVariation = 2;

struct CorruptionRanges {
  // Strong enough that full-strength corruption genuinely destroys identity
  // information: corrupted observations are hard examples, not mild noise.
  int blur_radius_min = 2;  // smoothing window 2r+1
  int blur_radius_max = 8;
  double occlude_fraction_min = 2.0 / 7.0;
  double occlude_fraction_max = 4.0 / 7.0;
  int occlude_blocks = 1;
  double pose_angle_min_deg = 40.0;
  double pose_angle_max_deg = 60.0;
};

struct DatasetConfig {
  int n_train_identities = 20;
  int n_test_identities = 10;
  int samples_per_identity = 50;
  int observation_dim = 64;
  double noise_scale = 0.5;  // within-class noise, relative to unit prototypes
  CorruptionRanges corruption;
  double apply_probability = 0.30;  // per corruption family, independently
  int attribute_count = 3;          // mined identity-level labels (T)
  uint64_t seed = 1;
  std::string format = "csv";  // "csv" | "binary"

  int NumVariations() const { return kAugmentableVariations + attribute_count; }
  void Validate() const;
};

// One observation: vector, identity, and binary variation labels where
// u[t] = 1 means clean / high quality along variation t.
struct VariationSample {
  Vec x;
  int identity = 0;
  std::vector<int> u;
};

// Fixed orthonormal 2-plane in which the pose corruption rotates.
struct RotationPlane {
  Vec e1, e2;
};

Mat GenIdentities(int count, int dim, RngStream rng);  // unit rows

VariationSample SampleClean(std::span<const double> prototype,
                            double noise_scale, int n_variations,
                            RngStream rng);

// Corruption operators. Each renormalizes its output and flips the matching
// u entry to 0; zero strength is an exact no-op (x and u untouched).
void CorruptBlur(VariationSample *sample, int radius);
void CorruptOcclude(VariationSample *sample, double block_fraction, int blocks,
                    RngStream *rng);
void CorruptPose(VariationSample *sample, double angle_rad,
                 const RotationPlane &plane);

RotationPlane MakeRotationPlane(int dim, RngStream rng);

// Applies each enabled corruption family independently with the given
// probability, drawing strengths from the configured ranges.
void Augment(VariationSample *sample, const CorruptionRanges &ranges,
             double probability, const RotationPlane &plane, RngStream rng,
             const std::array<bool, kAugmentableVariations> &enabled = {
                 true, true, true});

// Identity-level attribute labels: sign of fixed random linear functionals of
// the identity prototype, constant across an identity's samples.
Mat MakeAttributeFunctionals(int count, int dim, RngStream rng);
std::vector<int> MineAttributeLabels(std::span<const double> prototype,
                                     const Mat &functionals);

struct Dataset {
  DatasetConfig config;
  RotationPlane plane;
  std::vector<VariationSample> train;  // stored clean; augmented online
  std::vector<VariationSample> test;   // corruption baked in at generation
  int NumVariations() const { return config.NumVariations(); }
};

// Builds train/test splits over disjoint identity sets. Train observations
// are stored clean (mined labels filled in); test observations go through the
// corruption policy once so evaluation is fixed.
Dataset MakeDataset(const DatasetConfig &config);

// dataset.json manifest plus train/test rows in the configured format.
void SaveDataset(const Dataset &dataset, const std::string &dir);
Dataset LoadDataset(const std::string &dir);

}  // namespace subemb

#endif  // SUBEMB_SYNTHDATA_H_

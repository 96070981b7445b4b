// subemb/masks.h

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

#ifndef SUBEMB_MASKS_H_
#define SUBEMB_MASKS_H_

#include <cstdint>
#include <vector>

#include "subemb/encoder.h"

namespace subemb {

// One fixed binary mask per variation over the sub-embedding slots. Each mask
// keeps exactly floor(K/2) slots, all masks are pairwise distinct, and the
// set is immutable after generation: it is part of the trained artifact and
// is serialized inside the checkpoint.
struct MaskSet {
  int group_count = 0;
  std::vector<std::vector<uint8_t>> masks;  // each length group_count, 0/1

  int NumVariations() const { return static_cast<int>(masks.size()); }
  int OnesPerMask() const { return group_count / 2; }
};

// Draws `variation_count` distinct masks. Rejection sampling with a
// 10*variation_count attempt cap, then a deterministic lexicographic
// fallback, so generation is seed-stable and total. Throws ConfigError when
// the (group_count, variation_count) combination cannot yield distinct masks.
MaskSet GenerateMasks(int group_count, int variation_count, RngStream rng);

// Selected groups keep their (post-normalization) values, the rest are
// zeroed; output has full embedding length.
Vec ApplyMask(std::span<const uint8_t> mask, const ProbEmbedding &e);

}  // namespace subemb

#endif  // SUBEMB_MASKS_H_

// core/src/masks.cc

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

#include "subemb/masks.h"

#include <algorithm>
#include <set>

namespace subemb {

namespace {

// C(n, k) with saturation well above any feasible variation count.
double BinomialCapped(int n, int k) {
  double acc = 1.0;
  for (int i = 1; i <= k; ++i) {
    acc *= static_cast<double>(n - k + i) / i;
    if (acc > 1e18) return 1e18;
  }
  return acc;
}

std::vector<uint8_t> SampleMask(int group_count, int ones, RngStream &rng) {
  std::vector<int> slots(group_count);
  for (int i = 0; i < group_count; ++i) slots[i] = i;
  // Partial Fisher-Yates: the first `ones` entries are the selected slots.
  for (int i = 0; i < ones; ++i) {
    const int j = rng.UniformInt(i, group_count - 1);
    std::swap(slots[i], slots[j]);
  }
  std::vector<uint8_t> mask(group_count, 0);
  for (int i = 0; i < ones; ++i) mask[slots[i]] = 1;
  return mask;
}

// First mask with `ones` bits, in lexicographic order, not already used.
bool NextUnusedLexicographic(int group_count, int ones,
                             const std::set<std::vector<uint8_t>> &used,
                             std::vector<uint8_t> *out) {
  std::vector<int> idx(ones);
  for (int i = 0; i < ones; ++i) idx[i] = i;
  while (true) {
    std::vector<uint8_t> mask(group_count, 0);
    for (int i : idx) mask[i] = 1;
    if (used.find(mask) == used.end()) {
      *out = mask;
      return true;
    }
    // Advance the combination.
    int i = ones - 1;
    while (i >= 0 && idx[i] == group_count - ones + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < ones; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

MaskSet GenerateMasks(int group_count, int variation_count, RngStream rng) {
  if (group_count < 1) throw ConfigError("GenerateMasks: group_count must be >= 1");
  if (variation_count < 1)
    throw ConfigError("GenerateMasks: variation_count must be >= 1");
  const int ones = group_count / 2;
  if (BinomialCapped(group_count, ones) <
      static_cast<double>(variation_count)) {
    throw ConfigError(
        "GenerateMasks: cannot draw " + std::to_string(variation_count) +
        " distinct masks with " + std::to_string(ones) + " of " +
        std::to_string(group_count) + " slots selected");
  }

  MaskSet set;
  set.group_count = group_count;
  std::set<std::vector<uint8_t>> used;
  const int max_attempts = 10 * variation_count;
  int attempts = 0;
  while (static_cast<int>(set.masks.size()) < variation_count &&
         attempts < max_attempts) {
    ++attempts;
    std::vector<uint8_t> mask = SampleMask(group_count, ones, rng);
    if (used.insert(mask).second) set.masks.push_back(std::move(mask));
  }
  while (static_cast<int>(set.masks.size()) < variation_count) {
    std::vector<uint8_t> mask;
    if (!NextUnusedLexicographic(group_count, ones, used, &mask))
      throw ConfigError("GenerateMasks: exhausted distinct masks");
    used.insert(mask);
    set.masks.push_back(std::move(mask));
  }
  return set;
}

Vec ApplyMask(std::span<const uint8_t> mask, const ProbEmbedding &e) {
  if (static_cast<int>(mask.size()) != e.group_count)
    throw DimensionError("ApplyMask: mask length " +
                         std::to_string(mask.size()) + " != group_count " +
                         std::to_string(e.group_count));
  Vec out(e.Dim(), 0.0);
  for (int k = 0; k < e.group_count; ++k) {
    if (!mask[k]) continue;
    auto g = e.Group(k);
    std::copy(g.begin(), g.end(),
              out.begin() + static_cast<size_t>(k) * e.group_dim);
  }
  return out;
}

}  // namespace subemb

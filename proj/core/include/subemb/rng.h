// subemb/rng.h

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

#ifndef SUBEMB_RNG_H_
#define SUBEMB_RNG_H_

#include <cstdint>
#include <string_view>
#include <vector>

namespace subemb {

// Splittable counter-based generator. A stream is keyed by (seed, label) and
// can be derived into independent substreams by label or index, so every part
// of a pipeline (init, masks, augmentation, batching) owns its own stream and
// its draws do not depend on how many values other parts consumed.
//
// The value at counter c is a pure function of (key, c): the same (seed,
// label) pair yields an identical sequence on every platform. Only unsigned
// 64-bit arithmetic is used for the integer path.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view label);

  // Independent substream; the parent is not advanced.
  RngStream Derive(std::string_view label) const;
  RngStream Derive(uint64_t index) const;

  uint64_t NextU64();

  // Uniform in [0, 1), 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi);

  // Uniform integer in [lo, hi], inclusive.
  int UniformInt(int lo, int hi);

  // Standard normal via the Marsaglia polar method (two values per round;
  // the spare is cached).
  double Normal();

  // Fisher-Yates shuffle of [0, n) index permutation.
  std::vector<int> Permutation(int n);

  uint64_t key() const { return key_; }

 private:
  explicit RngStream(uint64_t key) : key_(key) {}

  uint64_t key_;
  uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace subemb

#endif  // SUBEMB_RNG_H_

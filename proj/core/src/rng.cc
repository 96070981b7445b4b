// core/src/rng.cc

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

#include "subemb/rng.h"

#include <cmath>

#include "subemb/common.h"

namespace subemb {

namespace {

// SplitMix64 finalizer; full-period bijection on uint64.
uint64_t Mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the label bytes.
uint64_t HashLabel(std::string_view label) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t CombineKeys(uint64_t a, uint64_t b) {
  return Mix64(a ^ Mix64(b + 0x9e3779b97f4a7c15ULL));
}

}  // namespace

RngStream::RngStream(uint64_t seed, std::string_view label)
    : key_(CombineKeys(Mix64(seed), HashLabel(label))) {}

RngStream RngStream::Derive(std::string_view label) const {
  return RngStream(CombineKeys(key_, HashLabel(label)));
}

RngStream RngStream::Derive(uint64_t index) const {
  return RngStream(CombineKeys(key_, Mix64(index ^ 0xa5a5a5a5a5a5a5a5ULL)));
}

uint64_t RngStream::NextU64() { return Mix64(key_ + counter_++); }

double RngStream::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double RngStream::Uniform(double lo, double hi) {
  return lo + (hi - lo) * Uniform();
}

int RngStream::UniformInt(int lo, int hi) {
  if (hi < lo) throw ConfigError("UniformInt: empty range");
  const uint64_t span = static_cast<uint64_t>(hi) - lo + 1;
  return lo + static_cast<int>(NextU64() % span);
}

double RngStream::Normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * Uniform() - 1.0;
    v = 2.0 * Uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  have_spare_ = true;
  return u * scale;
}

std::vector<int> RngStream::Permutation(int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = UniformInt(0, i);
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace subemb

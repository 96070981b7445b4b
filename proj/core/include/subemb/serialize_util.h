// subemb/serialize_util.h

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

#ifndef SUBEMB_SERIALIZE_UTIL_H_
#define SUBEMB_SERIALIZE_UTIL_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace subemb {

// Explicit little-endian scalar I/O so binary artifacts are byte-identical
// across platforms. Doubles round-trip bit-exactly.

inline void WriteU64(std::ostream &out, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char *>(buf), 8);
}

inline uint64_t ReadU64(std::istream &in) {
  unsigned char buf[8] = {};
  in.read(reinterpret_cast<char *>(buf), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void WriteF64(std::ostream &out, double v) {
  WriteU64(out, std::bit_cast<uint64_t>(v));
}

inline double ReadF64(std::istream &in) {
  return std::bit_cast<double>(ReadU64(in));
}

}  // namespace subemb

#endif  // SUBEMB_SERIALIZE_UTIL_H_

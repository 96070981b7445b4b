// subemb/common.h

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

#ifndef SUBEMB_COMMON_H_
#define SUBEMB_COMMON_H_

#include <stdexcept>
#include <string>

namespace subemb {

constexpr const char *kToolVersion = "0.1.0";

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// stable exit codes (config = 2, numeric = 3).
class SubembError : public std::runtime_error {
 public:
  explicit SubembError(const std::string &msg) : std::runtime_error(msg) {}
};

// Invalid user-facing configuration: bad field values, malformed files,
// infeasible parameter combinations.
class ConfigError : public SubembError {
 public:
  explicit ConfigError(const std::string &msg) : SubembError(msg) {}
};

// Shape disagreement between values that are supposed to be conformable.
class DimensionError : public SubembError {
 public:
  explicit DimensionError(const std::string &msg) : SubembError(msg) {}
};

// Degenerate or non-finite numeric state: zero-norm normalization input,
// NaN/Inf escaping an operation, diverging training loss.
class NumericError : public SubembError {
 public:
  explicit NumericError(const std::string &msg) : SubembError(msg) {}
};

}  // namespace subemb

#endif  // SUBEMB_COMMON_H_

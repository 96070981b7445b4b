// subemb/gradcheck.h

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

#ifndef SUBEMB_GRADCHECK_H_
#define SUBEMB_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace subemb {

// One row of the gradient-oracle report: a named gradient path aggregated
// over all random trials.
struct GradCheckCase {
  std::string name;
  double max_error = 0.0;  // relative vs central differences, or absolute
                           // for the closed-form row
  double tolerance = 0.0;
  std::string worst_param;  // parameter path of the worst coordinate
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  bool all_pass = true;
  int trials = 0;

  std::string ToTable() const;
};

struct GradCheckOptions {
  uint64_t seed = 7;
  int trials = 20;
  // Test hook: flips the sign of the largest analytic-gradient entry in the
  // named case, which must surface as a failure naming that parameter.
  std::string fault_inject_case;
};

// Checks every reverse-mode gradient in the library against central finite
// differences on random small instances, and the identification-loss
// closed forms against the reverse-mode path.
GradCheckReport RunGradientChecks(const GradCheckOptions &options);

}  // namespace subemb

#endif  // SUBEMB_GRADCHECK_H_

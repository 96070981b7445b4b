// subemb/checkpoint.h

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

#ifndef SUBEMB_CHECKPOINT_H_
#define SUBEMB_CHECKPOINT_H_

#include <string>

#include "subemb/trainer.h"

namespace subemb {

// Model bundle file: 8-byte magic, format version, a JSON header (encoder
// config, layer order, mask set, ablation state, training-config snapshot,
// tensor directory) and then the tensors as packed little-endian doubles in
// header order. Doubles round-trip bit-exactly.
void SaveBundle(const ModelBundle &bundle, const std::string &path);
ModelBundle LoadBundle(const std::string &path);

}  // namespace subemb

#endif  // SUBEMB_CHECKPOINT_H_

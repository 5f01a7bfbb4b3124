// Copyright 2026 The texpand Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "texpand/generator.hpp"

namespace texpand {

struct LayerGeometry {
  int kernel = 1;
  int stride = 1;
};

// Layer-by-layer receptive field of a plain convolution chain:
//   rf' = rf + (kernel - 1) * jump,  jump' = jump * stride.
int receptive_field(const std::vector<LayerGeometry>& chain);

// Convolutions from the input to the end of the residual chain (encoder, then
// two 3x3 convolutions per residual block).
std::vector<LayerGeometry> generator_trunk(const GeneratorSpec& spec);

// Receptive field of the last residual block's output w.r.t. the input.
int receptive_field(const GeneratorSpec& spec);

// Closed interval of input coordinates along one axis.
struct Span {
  long lo = 0;
  long hi = 0;
  long width() const { return hi - lo + 1; }
};

// Input coordinates that can influence output coordinate `out` of the full
// generator (trunk, channel-doubling conv, transposed convolutions and output
// conv), propagated exactly layer by layer. Borders are ignored: padding can
// only fold the window back inside the plane.
Span generator_support(const GeneratorSpec& spec, long out);

// Widest generator_support over all output phases: the receptive field of one
// output pixel of the whole network.
int full_receptive_field(const GeneratorSpec& spec);

}  // namespace texpand

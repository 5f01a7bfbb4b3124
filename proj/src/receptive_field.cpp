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

#include "texpand/receptive_field.hpp"

#include <algorithm>

namespace texpand {
namespace {

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long ceil_div(long a, long b) { return -floor_div(-a, b); }

struct AxisLayer {
  int kernel;
  int stride;
  int pad;
  bool transposed;
};

std::vector<AxisLayer> axis_layers(const GeneratorSpec& spec) {
  std::vector<AxisLayer> layers;
  for (const auto& d : spec.encoder) layers.push_back({d.kernel, d.stride, d.kernel / 2, false});
  for (int r = 0; r < 2 * spec.num_resblocks; ++r) layers.push_back({3, 1, 1, false});
  layers.push_back({spec.widen.kernel, 1, spec.widen.kernel / 2, false});
  for (const auto& d : spec.upsample) layers.push_back({d.kernel, d.stride, (d.kernel - 1) / 2, true});
  layers.push_back({spec.output.kernel, 1, spec.output.kernel / 2, false});
  return layers;
}

}  // namespace

int receptive_field(const std::vector<LayerGeometry>& chain) {
  int rf = 1;
  int jump = 1;
  for (const auto& l : chain) {
    rf += (l.kernel - 1) * jump;
    jump *= l.stride;
  }
  return rf;
}

std::vector<LayerGeometry> generator_trunk(const GeneratorSpec& spec) {
  std::vector<LayerGeometry> chain;
  for (const auto& d : spec.encoder) chain.push_back({d.kernel, d.stride});
  for (int r = 0; r < spec.num_resblocks; ++r) {
    chain.push_back({3, 1});
    chain.push_back({3, 1});
  }
  return chain;
}

int receptive_field(const GeneratorSpec& spec) { return receptive_field(generator_trunk(spec)); }

Span generator_support(const GeneratorSpec& spec, long out) {
  const auto layers = axis_layers(spec);
  Span s{out, out};
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    const auto& l = *it;
    if (!l.transposed) {
      s = {s.lo * l.stride - l.pad, s.hi * l.stride - l.pad + l.kernel - 1};
    } else {
      // Output o of a transposed conv receives input i when
      // 0 <= o + pad - i * stride <= kernel - 1.
      s = {ceil_div(s.lo + l.pad - l.kernel + 1, l.stride), floor_div(s.hi + l.pad, l.stride)};
    }
  }
  return s;
}

int full_receptive_field(const GeneratorSpec& spec) {
  // The support pattern repeats with the decoder's total up-sampling factor.
  long period = 1;
  for (const auto& d : spec.upsample) period *= d.stride;
  long widest = 0;
  for (long o = 0; o < period; ++o) {
    widest = std::max(widest, generator_support(spec, 4096 + o).width());
  }
  return static_cast<int>(widest);
}

}  // namespace texpand

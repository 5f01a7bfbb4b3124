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

#include <string>
#include <vector>

#include "texpand/image.hpp"
#include "texpand/kernels.hpp"
#include "texpand/layers.hpp"
#include "texpand/random.hpp"
#include "texpand/weights.hpp"

namespace texpand {

struct ConvDescriptor {
  int kernel = 3;
  int stride = 1;
  int channels = 0;
  bool operator==(const ConvDescriptor&) const = default;
};

// Fully-convolutional expansion network: an encoder that reduces the plane by
// 4, a chain of residual blocks, a channel-doubling convolution, three
// stride-2 transposed convolutions and a final projection to RGB. The net
// effect is an exact 2x enlargement.
struct GeneratorSpec {
  std::vector<ConvDescriptor> encoder;   // conv + norm + relu
  int num_resblocks = 6;                 // two 3x3 convs with a skip add
  ConvDescriptor widen;                  // channel doubling, conv + norm + relu
  std::vector<ConvDescriptor> upsample;  // transposed conv + norm + relu
  ConvDescriptor output;                 // final conv, no norm, then tanh
  bool batch_norm = true;
  kernels::Padding padding = kernels::Padding::reflect;
  std::string output_nonlinearity = "tanh";

  // Encoder 7/3/3 with strides 1/2/2 and widths c, 2c, 4c; residual blocks at
  // 4c; widened to 8c; decoder 4c, 2c, c; final 7x7 to RGB.
  static GeneratorSpec standard(int base_channels = 64, int num_resblocks = 6);

  int base_channels() const { return encoder.empty() ? 0 : encoder.front().channels; }
  int resblock_channels() const { return encoder.empty() ? 0 : encoder.back().channels; }
  int downsample_factor() const;

  void validate() const;
  std::string canonical() const;
  static GeneratorSpec parse(const std::string& text);
  bool operator==(const GeneratorSpec&) const = default;
};

// Names of the stages whose outputs can be inspected: "relu" (post-encoder),
// "resblock_1".."resblock_N", "conv" (first decoder convolution).
std::vector<std::string> feature_layer_names(const GeneratorSpec& spec);

template <typename T>
class Generator {
 public:
  explicit Generator(GeneratorSpec spec);

  const GeneratorSpec& spec() const { return spec_; }
  Sequential<T>& net() { return net_; }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode);
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad);
  // Output of a named stage (see feature_layer_names), inference mode.
  BasicTensor<T> features(const BasicTensor<T>& x, const std::string& layer);

  // N(0, 0.02^2) convolution weights, unit normalization scales, zero offsets.
  void initialize(Rng& rng);
  void load(const NetworkWeights& weights, const std::string& prefix = "");
  NetworkWeights save() const;

  void check_input(int height, int width) const;

 private:
  GeneratorSpec spec_;
  Sequential<T> net_;
};

NetworkWeights build_generator(const GeneratorSpec& spec, Rng& rng);
// Inference with running normalization statistics; output is 2h x 2w in [-1, 1].
ImagePlane generator_forward(const NetworkWeights& weights, const GeneratorSpec& spec,
                             const ImagePlane& img);

// Channel-averaged (channel < 0) or single-channel map of a stage, min-max
// rescaled to [-1, 1] and replicated to three channels for viewing.
ImagePlane visualize_features(const NetworkWeights& weights, const GeneratorSpec& spec,
                              const ImagePlane& img, const std::string& layer, int channel = -1);
// ||a - b|| / ||b|| between two stages' raw feature maps (e.g. resblock_5 vs
// resblock_6).
double feature_map_difference(const NetworkWeights& weights, const GeneratorSpec& spec,
                              const ImagePlane& img, const std::string& layer_a,
                              const std::string& layer_b);

// Checks the "kind" and spec recorded in a generator archive and returns the spec.
GeneratorSpec generator_spec_of(const NetworkWeights& weights);

}  // namespace texpand

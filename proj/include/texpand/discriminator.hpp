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
#include "texpand/layers.hpp"
#include "texpand/random.hpp"
#include "texpand/weights.hpp"

namespace texpand {

// PatchGAN classifier: L kernel-4 convolutions (the first L-2 at stride 2, the
// last two at stride 1) with leaky ReLU, then a 1x1 projection and a sigmoid
// that scores every overlapping patch.
struct DiscriminatorSpec {
  int num_conv_layers = 6;
  int base_channels = 64;
  int channel_cap = 512;
  int kernel = 4;
  bool batch_norm = true;
  double leaky_slope = 0.2;

  static constexpr int kMinLayers = 3;
  static constexpr int kMaxLayers = 8;

  // Output width of conv i (0-based): base * 2^i, capped.
  std::vector<int> channels() const;
  std::vector<int> strides() const;
  // Channels of the per-patch descriptor fed to the head.
  int descriptor_width() const { return channels().back(); }

  void validate() const;
  std::string canonical() const;
  static DiscriminatorSpec parse(const std::string& text);
  bool operator==(const DiscriminatorSpec&) const = default;
};

// Receptive field of one pre-head unit, by layer-by-layer arithmetic.
int patch_size(int num_conv_layers);
// 18 * 2^(L-3) - 2.
int patch_size_closed_form(int num_conv_layers);

template <typename T>
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorSpec spec);

  const DiscriminatorSpec& spec() const { return spec_; }
  Sequential<T>& net() { return net_; }

  // N x 1 x gh x gw probabilities.
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode);
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad);

  // Probability grid size for an h x w input; fails when it would be empty.
  std::pair<int, int> grid_size(int height, int width) const;

  void initialize(Rng& rng);
  void load(const NetworkWeights& weights, const std::string& prefix = "");
  NetworkWeights save() const;

 private:
  DiscriminatorSpec spec_;
  Sequential<T> net_;
};

NetworkWeights build_discriminator(const DiscriminatorSpec& spec, Rng& rng);
// Inference with running statistics; returns the 1 x 1 x gh x gw grid.
Tensor discriminator_forward(const NetworkWeights& weights, const DiscriminatorSpec& spec,
                             const ImagePlane& img);

DiscriminatorSpec discriminator_spec_of(const NetworkWeights& weights);

}  // namespace texpand

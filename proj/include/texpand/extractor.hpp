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

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "texpand/layers.hpp"
#include "texpand/weights.hpp"

namespace texpand {

// Frozen VGG-19 convolution stack up to relu5_1 (3x3 zero-padded convs with
// bias, ReLU, 2x2 max pooling), exposing five ReLU taps. Inputs are canonical
// [-1, 1] images; the mapping to the network's expected normalization
// ((x + 1) / 2 - mean) / std is applied internally.
template <typename T>
class FeatureExtractor {
 public:
  static constexpr std::array<const char*, 5> kTaps{"relu1_1", "relu2_1", "relu3_1", "relu4_1",
                                                    "relu5_1"};
  // Names of the thirteen convolutions in order (conv1_1 ... conv5_1).
  static const std::vector<std::string>& conv_names();

  // `widths` gives the output channels of each of the thirteen convolutions.
  FeatureExtractor(const std::vector<int>& widths, std::array<double, 3> mean,
                   std::array<double, 3> stddev);

  // Builds from an archive; widths are read from the stored shapes.
  static FeatureExtractor from_weights(const NetworkWeights& weights);

  // Activations at the five taps. `record` keeps what backward needs.
  std::vector<BasicTensor<T>> forward(const BasicTensor<T>& x, bool record);
  // Gradient w.r.t. the canonical input, given gradients at the taps (empty
  // tensors count as zero). Requires a preceding recorded forward.
  BasicTensor<T> backward(const std::vector<BasicTensor<T>>& tap_grads);

  std::vector<int> tap_channels() const;
  std::vector<Param<T>*> parameters();

 private:
  std::array<double, 3> mean_;
  std::array<double, 3> std_;
  std::vector<int> tap_channels_;
  std::vector<std::unique_ptr<Sequential<T>>> stages_;
};

// ImageNet channel statistics used by torchvision's pretrained VGG-19.
inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

// VGG-19 layout widths divided by `width_divisor`.
std::vector<int> vgg19_widths(int width_divisor = 1);

// Reads and checks an extractor archive (kind=extractor, all thirteen convs,
// checksum). A missing file gives an error explaining how to obtain one.
NetworkWeights load_extractor(const std::filesystem::path& path);

// Randomly initialized (He normal) extractor of the VGG-19 layout. Used when
// pretrained weights are unavailable; the style term then measures Gram
// statistics of random features instead of ImageNet features.
NetworkWeights make_standin_extractor(int width_divisor, std::uint64_t seed);

}  // namespace texpand

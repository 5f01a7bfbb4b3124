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

#include "texpand/extractor.hpp"
#include "texpand/image.hpp"
#include "texpand/tensor.hpp"

namespace texpand {

struct LossWeights {
  double lambda1 = 100.0;  // L1
  double lambda2 = 1.0;    // style
  bool enable_adv = true;
  bool enable_l1 = true;
  bool enable_style = true;
};

// Extractor taps used by the style term and their weights.
struct StyleLayerSet {
  std::vector<std::string> layers;
  std::vector<double> weights;

  // Nominal tap widths of the pretrained extractor.
  static constexpr std::array<int, 5> kNominalChannels{64, 128, 256, 512, 512};
  // relu1_1 ... relu5_1 with weight 1000 / C^2 for C in kNominalChannels.
  static StyleLayerSet standard();
};

struct LossReport {
  long iteration = 0;
  double adv_G = 0.0;
  double adv_D = 0.0;
  double l1 = 0.0;
  double style = 0.0;
  double total_G = 0.0;

  bool finite() const;
};

// Flag-masked adv_G + lambda1 * l1 + lambda2 * style.
double total_objective(const LossReport& r, const LossWeights& w);

// G[i][j] = sum over positions of F_i * F_j / (H * W), for one sample
// (1 x C x H x W) in, 1 x 1 x C x C out.
template <typename T>
BasicTensor<T> gram_matrix(const BasicTensor<T>& features);
// dL/dF given dL/dG: (dG + dG^T) F / (H * W).
template <typename T>
BasicTensor<T> gram_backward(const BasicTensor<T>& features, const BasicTensor<T>& grad_gram);

// Mean absolute difference. When `grad` is non-null it receives dL/dfake.
template <typename T>
double l1_loss(const BasicTensor<T>& fake, const BasicTensor<T>& real, BasicTensor<T>* grad = nullptr);
double l1_loss(const ImagePlane& fake, const ImagePlane& real);

inline constexpr double kProbabilityEpsilon = 1e-7;

// Mean binary cross-entropy of a probability grid against a constant label,
// probabilities clamped to [eps, 1 - eps]. `grad` receives dL/dp.
template <typename T>
double binary_cross_entropy(const BasicTensor<T>& probs, double label, BasicTensor<T>* grad = nullptr);

struct AdversarialLosses {
  double loss_D = 0.0;  // BCE(real, 1) + BCE(fake, 0)
  double loss_G = 0.0;  // BCE(fake, 1)
};
template <typename T>
AdversarialLosses adversarial_losses(const BasicTensor<T>& real_grid, const BasicTensor<T>& fake_grid);

// sum_i weight_i * mean((G_i(fake) - G_i(real))^2) over the extractor taps,
// averaged over the batch. When `grad` is non-null it receives dL/dfake.
template <typename T>
double style_loss(FeatureExtractor<T>& extractor, const BasicTensor<T>& fake,
                  const BasicTensor<T>& real, const StyleLayerSet& layers,
                  BasicTensor<T>* grad = nullptr);
double style_loss(const ImagePlane& fake, const ImagePlane& real, FeatureExtractor<float>& extractor,
                  const StyleLayerSet& layers);

}  // namespace texpand

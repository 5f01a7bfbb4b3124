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

#include "texpand/losses.hpp"

#include <algorithm>
#include <cmath>

#include "texpand/kernels.hpp"

namespace texpand {
namespace {

template <typename T>
BasicTensor<T> sample_of(const BasicTensor<T>& x, int n) {
  BasicTensor<T> s(1, x.c(), x.h(), x.w());
  std::copy(x.sample(n), x.sample(n) + s.size(), s.data());
  return s;
}

}  // namespace

StyleLayerSet StyleLayerSet::standard() {
  StyleLayerSet s;
  for (std::size_t i = 0; i < kNominalChannels.size(); ++i) {
    s.layers.emplace_back(FeatureExtractor<float>::kTaps[i]);
    const double c = kNominalChannels[i];
    s.weights.push_back(1000.0 / (c * c));
  }
  return s;
}

bool LossReport::finite() const {
  return std::isfinite(adv_G) && std::isfinite(adv_D) && std::isfinite(l1) && std::isfinite(style) &&
         std::isfinite(total_G);
}

double total_objective(const LossReport& r, const LossWeights& w) {
  double total = 0.0;
  if (w.enable_adv) total += r.adv_G;
  if (w.enable_l1) total += w.lambda1 * r.l1;
  if (w.enable_style) total += w.lambda2 * r.style;
  return total;
}

template <typename T>
BasicTensor<T> gram_matrix(const BasicTensor<T>& f) {
  if (f.n() != 1) fail("shape", "gram_matrix takes a single sample, got " + f.shape().str());
  const int c = f.c();
  const int hw = f.h() * f.w();
  if (c < 1 || hw < 1) fail("precondition", "gram_matrix of an empty feature map");
  BasicTensor<T> g(1, 1, c, c);
  kernels::gemm(false, true, c, c, hw, static_cast<T>(1.0 / hw), f.data(), hw, f.data(), hw, T(0),
                g.data(), c);
  return g;
}

template <typename T>
BasicTensor<T> gram_backward(const BasicTensor<T>& f, const BasicTensor<T>& dg) {
  const int c = f.c();
  const int hw = f.h() * f.w();
  if (f.n() != 1 || dg.h() != c || dg.w() != c) fail("shape", "gram_backward shape mismatch");
  BasicTensor<T> sym(1, 1, c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) sym.at(0, 0, i, j) = dg.at(0, 0, i, j) + dg.at(0, 0, j, i);
  }
  BasicTensor<T> df(f.shape());
  kernels::gemm(false, false, c, hw, c, static_cast<T>(1.0 / hw), sym.data(), c, f.data(), hw, T(0),
                df.data(), hw);
  return df;
}

template <typename T>
double l1_loss(const BasicTensor<T>& fake, const BasicTensor<T>& real, BasicTensor<T>* grad) {
  require_same_shape(fake, real, "l1_loss");
  if (fake.empty()) fail("precondition", "l1_loss of empty images");
  const double inv = 1.0 / static_cast<double>(fake.size());
  double sum = 0.0;
  if (grad) *grad = BasicTensor<T>(fake.shape());
  for (std::size_t i = 0; i < fake.size(); ++i) {
    const double d = static_cast<double>(fake[i]) - real[i];
    sum += std::abs(d);
    if (grad) (*grad)[i] = static_cast<T>(d > 0 ? inv : (d < 0 ? -inv : 0.0));
  }
  return sum * inv;
}

double l1_loss(const ImagePlane& fake, const ImagePlane& real) {
  return l1_loss(fake.tensor(), real.tensor());
}

template <typename T>
double binary_cross_entropy(const BasicTensor<T>& probs, double label, BasicTensor<T>* grad) {
  if (probs.empty()) fail("precondition", "binary cross-entropy of an empty grid");
  const double inv = 1.0 / static_cast<double>(probs.size());
  double sum = 0.0;
  if (grad) *grad = BasicTensor<T>(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(static_cast<double>(probs[i]), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    sum -= label * std::log(p) + (1.0 - label) * std::log1p(-p);
    if (grad) (*grad)[i] = static_cast<T>(inv * (-label / p + (1.0 - label) / (1.0 - p)));
  }
  return sum * inv;
}

template <typename T>
AdversarialLosses adversarial_losses(const BasicTensor<T>& real_grid, const BasicTensor<T>& fake_grid) {
  AdversarialLosses a;
  a.loss_D = binary_cross_entropy(real_grid, 1.0) + binary_cross_entropy(fake_grid, 0.0);
  a.loss_G = binary_cross_entropy(fake_grid, 1.0);
  return a;
}

template <typename T>
double style_loss(FeatureExtractor<T>& extractor, const BasicTensor<T>& fake, const BasicTensor<T>& real,
                  const StyleLayerSet& layers, BasicTensor<T>* grad) {
  require_same_shape(fake, real, "style_loss");
  constexpr auto& taps = FeatureExtractor<T>::kTaps;
  std::vector<double> tap_weight(taps.size(), 0.0);
  if (layers.layers.size() != layers.weights.size()) fail("config", "style layers and weights differ in count");
  for (std::size_t i = 0; i < layers.layers.size(); ++i) {
    const auto it = std::find(taps.begin(), taps.end(), layers.layers[i]);
    if (it == taps.end()) fail("config", "unknown style layer '" + layers.layers[i] + "'");
    tap_weight[static_cast<std::size_t>(it - taps.begin())] += layers.weights[i];
  }

  const auto real_taps = extractor.forward(real, false);
  const auto fake_taps = extractor.forward(fake, grad != nullptr);
  const int batch = fake.n();
  std::vector<BasicTensor<T>> tap_grads(taps.size());
  double total = 0.0;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    if (tap_weight[t] == 0.0) continue;
    const auto& ff = fake_taps[t];
    if (grad) tap_grads[t] = BasicTensor<T>(ff.shape());
    for (int n = 0; n < batch; ++n) {
      const BasicTensor<T> fs = sample_of(ff, n);
      const BasicTensor<T> gf = gram_matrix(fs);
      const BasicTensor<T> gr = gram_matrix(sample_of(real_taps[t], n));
      const double entries = static_cast<double>(gf.size());
      double sq = 0.0;
      BasicTensor<T> dg(gf.shape());
      for (std::size_t i = 0; i < gf.size(); ++i) {
        const double d = static_cast<double>(gf[i]) - gr[i];
        sq += d * d;
        dg[i] = static_cast<T>(tap_weight[t] * 2.0 * d / (entries * batch));
      }
      total += tap_weight[t] * sq / entries / batch;
      if (grad) {
        const BasicTensor<T> df = gram_backward(fs, dg);
        std::copy(df.data(), df.data() + df.size(), tap_grads[t].sample(n));
      }
    }
  }
  if (grad) {
    const bool any = std::any_of(tap_grads.begin(), tap_grads.end(), [](const auto& g) { return !g.empty(); });
    *grad = any ? extractor.backward(tap_grads) : BasicTensor<T>(fake.shape());
  }
  return total;
}

double style_loss(const ImagePlane& fake, const ImagePlane& real, FeatureExtractor<float>& extractor,
                  const StyleLayerSet& layers) {
  return style_loss(extractor, fake.tensor(), real.tensor(), layers);
}

#define TEXPAND_INSTANTIATE(T)                                                                    \
  template BasicTensor<T> gram_matrix(const BasicTensor<T>&);                                     \
  template BasicTensor<T> gram_backward(const BasicTensor<T>&, const BasicTensor<T>&);            \
  template double l1_loss(const BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>*);         \
  template double binary_cross_entropy(const BasicTensor<T>&, double, BasicTensor<T>*);           \
  template AdversarialLosses adversarial_losses(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template double style_loss(FeatureExtractor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                             const StyleLayerSet&, BasicTensor<T>*);
TEXPAND_INSTANTIATE(float)
TEXPAND_INSTANTIATE(double)
#undef TEXPAND_INSTANTIATE

}  // namespace texpand

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

#include "texpand/discriminator.hpp"

#include <algorithm>
#include <sstream>

#include "texpand/receptive_field.hpp"

namespace texpand {
namespace {

constexpr int kPad = 1;

int conv_out(int n, int kernel, int stride) { return (n + 2 * kPad - kernel) / stride + 1; }

}  // namespace

std::vector<int> DiscriminatorSpec::channels() const {
  std::vector<int> ch;
  int c = base_channels;
  for (int i = 0; i < num_conv_layers; ++i) {
    ch.push_back(std::min(c, channel_cap));
    c *= 2;
  }
  return ch;
}

std::vector<int> DiscriminatorSpec::strides() const {
  std::vector<int> s(static_cast<std::size_t>(std::max(num_conv_layers, 0)), 2);
  for (int i = std::max(num_conv_layers - 2, 0); i < num_conv_layers; ++i) s[i] = 1;
  return s;
}

void DiscriminatorSpec::validate() const {
  if (num_conv_layers < kMinLayers || num_conv_layers > kMaxLayers) {
    fail("range", "discriminator depth L=" + std::to_string(num_conv_layers) + " outside [" +
                      std::to_string(kMinLayers) + ", " + std::to_string(kMaxLayers) + "]");
  }
  if (base_channels < 1 || channel_cap < base_channels) {
    fail("spec", "discriminator channels need 1 <= base <= cap");
  }
  if (kernel < 2) fail("spec", "discriminator kernel must be at least 2");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) fail("spec", "leaky slope must lie in [0, 1)");
}

std::string DiscriminatorSpec::canonical() const {
  std::ostringstream s;
  s << "L=" << num_conv_layers << ";base=" << base_channels << ";cap=" << channel_cap
    << ";k=" << kernel << ";bn=" << (batch_norm ? 1 : 0) << ";slope=" << leaky_slope;
  return s.str();
}

DiscriminatorSpec DiscriminatorSpec::parse(const std::string& text) {
  DiscriminatorSpec s;
  std::stringstream ss(text);
  for (std::string field; std::getline(ss, field, ';');) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) fail("config", "bad discriminator spec field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "L") {
        s.num_conv_layers = std::stoi(value);
      } else if (key == "base") {
        s.base_channels = std::stoi(value);
      } else if (key == "cap") {
        s.channel_cap = std::stoi(value);
      } else if (key == "k") {
        s.kernel = std::stoi(value);
      } else if (key == "bn") {
        s.batch_norm = value == "1";
      } else if (key == "slope") {
        s.leaky_slope = std::stod(value);
      } else {
        fail("config", "unknown discriminator spec field '" + key + "'");
      }
    } catch (const std::logic_error&) {
      fail("config", "bad value '" + value + "' for discriminator field '" + key + "'");
    }
  }
  s.validate();
  return s;
}

int patch_size(int num_conv_layers) {
  DiscriminatorSpec spec;
  spec.num_conv_layers = num_conv_layers;
  std::vector<LayerGeometry> chain;
  for (int s : spec.strides()) chain.push_back({spec.kernel, s});
  return receptive_field(chain);
}

int patch_size_closed_form(int num_conv_layers) { return 18 * (1 << (num_conv_layers - 3)) - 2; }

template <typename T>
Discriminator<T>::Discriminator(DiscriminatorSpec spec) : spec_(spec), net_("discriminator") {
  spec_.validate();
  const auto ch = spec_.channels();
  const auto st = spec_.strides();
  int cin = 3;
  for (int i = 0; i < spec_.num_conv_layers; ++i) {
    const std::string name = "layer_" + std::to_string(i + 1);
    const bool norm = spec_.batch_norm && i > 0;
    net_.template emplace<Conv2d<T>>(name + ".conv", cin, ch[i], spec_.kernel, st[i], kPad,
                                     kernels::Padding::zero, !norm);
    if (norm) net_.template emplace<BatchNorm2d<T>>(name + ".bn", ch[i]);
    net_.template emplace<Pointwise<T>>(name + ".lrelu", Activation::leaky_relu,
                                        static_cast<T>(spec_.leaky_slope));
    cin = ch[i];
  }
  net_.template emplace<Conv2d<T>>("head.conv", cin, 1, 1, 1, 0, kernels::Padding::zero, true);
  net_.template emplace<Pointwise<T>>("head.sigmoid", Activation::sigmoid);
}

template <typename T>
std::pair<int, int> Discriminator<T>::grid_size(int height, int width) const {
  int h = height;
  int w = width;
  for (int s : spec_.strides()) {
    h = conv_out(h, spec_.kernel, s);
    w = conv_out(w, spec_.kernel, s);
    if (h < 1 || w < 1) {
      fail("precondition", "discriminator input " + std::to_string(height) + "x" +
                               std::to_string(width) + " is too small for L=" +
                               std::to_string(spec_.num_conv_layers) + " (empty output grid)");
    }
  }
  return {h, w};
}

template <typename T>
BasicTensor<T> Discriminator<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (x.c() != 3) fail("shape", "discriminator expects 3-channel input");
  grid_size(x.h(), x.w());
  return net_.forward(x, mode);
}

template <typename T>
BasicTensor<T> Discriminator<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  return net_.backward(grad, input_grad);
}

template <typename T>
void Discriminator<T>::initialize(Rng& rng) {
  initialize_normal(net_, rng, 0.02);
}

template <typename T>
void Discriminator<T>::load(const NetworkWeights& weights, const std::string& prefix) {
  import_state(net_, weights, prefix);
}

template <typename T>
NetworkWeights Discriminator<T>::save() const {
  NetworkWeights w;
  export_state(const_cast<Sequential<T>&>(net_), w);
  w.metadata["kind"] = "discriminator";
  w.metadata["discriminator.spec"] = spec_.canonical();
  return w;
}

template class Discriminator<float>;
template class Discriminator<double>;

NetworkWeights build_discriminator(const DiscriminatorSpec& spec, Rng& rng) {
  Discriminator<float> d(spec);
  d.initialize(rng);
  return d.save();
}

Tensor discriminator_forward(const NetworkWeights& weights, const DiscriminatorSpec& spec,
                             const ImagePlane& img) {
  Discriminator<float> d(spec);
  d.load(weights);
  return d.forward(img.tensor(), Mode::inference);
}

DiscriminatorSpec discriminator_spec_of(const NetworkWeights& weights) {
  const auto it = weights.metadata.find("discriminator.spec");
  if (it == weights.metadata.end()) {
    fail("mismatch", "archive does not describe a discriminator (no discriminator.spec metadata)");
  }
  return DiscriminatorSpec::parse(it->second);
}

}  // namespace texpand

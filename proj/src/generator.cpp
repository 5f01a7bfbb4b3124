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

#include "texpand/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "texpand/hash.hpp"

namespace texpand {
namespace {

std::string descriptor_text(const ConvDescriptor& d) {
  return std::to_string(d.kernel) + "/" + std::to_string(d.stride) + "/" + std::to_string(d.channels);
}

std::string list_text(const std::vector<ConvDescriptor>& ds) {
  std::string s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i) s += ",";
    s += descriptor_text(ds[i]);
  }
  return s;
}

ConvDescriptor parse_descriptor(const std::string& s) {
  ConvDescriptor d;
  char a = 0, b = 0;
  std::istringstream ss(s);
  if (!(ss >> d.kernel >> a >> d.stride >> b >> d.channels) || a != '/' || b != '/') {
    fail("config", "bad layer descriptor '" + s + "' (expected kernel/stride/channels)");
  }
  return d;
}

std::vector<ConvDescriptor> parse_list(const std::string& s) {
  std::vector<ConvDescriptor> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(parse_descriptor(part));
  return out;
}

const char* padding_name(kernels::Padding p) {
  return p == kernels::Padding::reflect ? "reflect" : "zero";
}

template <typename T>
void add_conv_block(Sequential<T>& stage, int cin, const ConvDescriptor& d, const GeneratorSpec& spec,
                    const std::string& prefix) {
  stage.template emplace<Conv2d<T>>(prefix + ".conv", cin, d.channels, d.kernel, d.stride,
                                    d.kernel / 2, spec.padding, !spec.batch_norm);
  if (spec.batch_norm) stage.template emplace<BatchNorm2d<T>>(prefix + ".bn", d.channels);
  stage.template emplace<Pointwise<T>>(prefix + ".relu", Activation::relu);
}

}  // namespace

GeneratorSpec GeneratorSpec::standard(int base_channels, int num_resblocks) {
  const int c = base_channels;
  GeneratorSpec s;
  s.encoder = {{7, 1, c}, {3, 2, 2 * c}, {3, 2, 4 * c}};
  s.num_resblocks = num_resblocks;
  s.widen = {3, 1, 8 * c};
  s.upsample = {{3, 2, 4 * c}, {3, 2, 2 * c}, {3, 2, c}};
  s.output = {7, 1, 3};
  return s;
}

int GeneratorSpec::downsample_factor() const {
  int f = 1;
  for (const auto& d : encoder) f *= d.stride;
  return f;
}

void GeneratorSpec::validate() const {
  auto bad = [](const std::string& why) { fail("spec", "inconsistent generator spec: " + why); };
  if (encoder.empty()) bad("empty encoder");
  const auto stride2 = [](const std::vector<ConvDescriptor>& ds) {
    return std::count_if(ds.begin(), ds.end(), [](const auto& d) { return d.stride == 2; });
  };
  if (stride2(encoder) != 2) bad("encoder needs exactly two stride-2 layers");
  for (const auto& d : encoder) {
    if (d.stride != 1 && d.stride != 2) bad("encoder strides must be 1 or 2");
  }
  if (upsample.size() != 3 || stride2(upsample) != 3) bad("decoder needs exactly three stride-2 up-sampling layers");
  if (num_resblocks < 0) bad("negative residual block count");
  if (widen.stride != 1) bad("channel-doubling convolution must have stride 1");
  if (output.stride != 1) bad("output convolution must have stride 1");
  if (output.channels != 3) bad("output must have 3 channels, got " + std::to_string(output.channels));
  auto check = [&](const ConvDescriptor& d) {
    if (d.channels < 1) bad("non-positive channel count");
    if (d.kernel < 1 || d.kernel % 2 == 0) bad("kernels must be odd");
  };
  for (const auto& d : encoder) check(d);
  for (const auto& d : upsample) check(d);
  check(widen);
  check(output);
  if (output_nonlinearity != "tanh") bad("unsupported output nonlinearity '" + output_nonlinearity + "'");
}

std::string GeneratorSpec::canonical() const {
  return "enc=" + list_text(encoder) + ";res=" + std::to_string(num_resblocks) +
         ";widen=" + descriptor_text(widen) + ";up=" + list_text(upsample) +
         ";out=" + descriptor_text(output) + ";bn=" + (batch_norm ? "1" : "0") +
         ";pad=" + padding_name(padding) + ";act=" + output_nonlinearity;
}

GeneratorSpec GeneratorSpec::parse(const std::string& text) {
  GeneratorSpec s;
  std::stringstream ss(text);
  for (std::string field; std::getline(ss, field, ';');) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) fail("config", "bad generator spec field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "enc") {
      s.encoder = parse_list(value);
    } else if (key == "res") {
      s.num_resblocks = std::stoi(value);
    } else if (key == "widen") {
      s.widen = parse_descriptor(value);
    } else if (key == "up") {
      s.upsample = parse_list(value);
    } else if (key == "out") {
      s.output = parse_descriptor(value);
    } else if (key == "bn") {
      s.batch_norm = value == "1";
    } else if (key == "pad") {
      if (value != "reflect" && value != "zero") fail("config", "unknown padding '" + value + "'");
      s.padding = value == "reflect" ? kernels::Padding::reflect : kernels::Padding::zero;
    } else if (key == "act") {
      s.output_nonlinearity = value;
    } else {
      fail("config", "unknown generator spec field '" + key + "'");
    }
  }
  s.validate();
  return s;
}

std::vector<std::string> feature_layer_names(const GeneratorSpec& spec) {
  std::vector<std::string> names{"relu"};
  for (int i = 1; i <= spec.num_resblocks; ++i) names.push_back("resblock_" + std::to_string(i));
  names.push_back("conv");
  return names;
}

template <typename T>
Generator<T>::Generator(GeneratorSpec spec) : spec_(std::move(spec)), net_("generator") {
  spec_.validate();
  int ch = 3;
  for (std::size_t i = 0; i < spec_.encoder.size(); ++i) {
    const std::string name = i + 1 == spec_.encoder.size() ? "relu" : "encoder_" + std::to_string(i + 1);
    auto& stage = net_.template emplace<Sequential<T>>(name);
    add_conv_block(stage, ch, spec_.encoder[i], spec_, "encoder_" + std::to_string(i + 1));
    ch = spec_.encoder[i].channels;
  }
  for (int r = 1; r <= spec_.num_resblocks; ++r) {
    const std::string name = "resblock_" + std::to_string(r);
    auto& block = net_.template emplace<Residual<T>>(name);
    auto& body = block.body();
    body.template emplace<Conv2d<T>>(name + ".conv_a", ch, ch, 3, 1, 1, spec_.padding, !spec_.batch_norm);
    if (spec_.batch_norm) body.template emplace<BatchNorm2d<T>>(name + ".bn_a", ch);
    body.template emplace<Pointwise<T>>(name + ".relu_a", Activation::relu);
    body.template emplace<Conv2d<T>>(name + ".conv_b", ch, ch, 3, 1, 1, spec_.padding, !spec_.batch_norm);
    if (spec_.batch_norm) body.template emplace<BatchNorm2d<T>>(name + ".bn_b", ch);
  }
  {
    auto& stage = net_.template emplace<Sequential<T>>("conv");
    add_conv_block(stage, ch, spec_.widen, spec_, "widen");
    ch = spec_.widen.channels;
  }
  for (std::size_t i = 0; i < spec_.upsample.size(); ++i) {
    const std::string name = "upsample_" + std::to_string(i + 1);
    const auto& d = spec_.upsample[i];
    auto& stage = net_.template emplace<Sequential<T>>(name);
    stage.template emplace<ConvTranspose2d<T>>(name + ".deconv", ch, d.channels, d.kernel, d.stride,
                                               !spec_.batch_norm);
    if (spec_.batch_norm) stage.template emplace<BatchNorm2d<T>>(name + ".bn", d.channels);
    stage.template emplace<Pointwise<T>>(name + ".relu", Activation::relu);
    ch = d.channels;
  }
  {
    auto& stage = net_.template emplace<Sequential<T>>("output");
    stage.template emplace<Conv2d<T>>("output.conv", ch, spec_.output.channels, spec_.output.kernel, 1,
                                      spec_.output.kernel / 2, spec_.padding, true);
    stage.template emplace<Pointwise<T>>("output.tanh", Activation::tanh);
  }
}

template <typename T>
void Generator<T>::check_input(int height, int width) const {
  const int f = spec_.downsample_factor();
  if (height % f != 0 || width % f != 0 || height < 4 * f || width < 4 * f) {
    fail("precondition", "generator input " + std::to_string(height) + "x" + std::to_string(width) +
                             " must have sides divisible by " + std::to_string(f) +
                             " and at least " + std::to_string(4 * f));
  }
}

template <typename T>
BasicTensor<T> Generator<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (x.c() != 3) fail("shape", "generator expects 3-channel input");
  check_input(x.h(), x.w());
  return net_.forward(x, mode);
}

template <typename T>
BasicTensor<T> Generator<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  return net_.backward(grad, input_grad);
}

template <typename T>
BasicTensor<T> Generator<T>::features(const BasicTensor<T>& x, const std::string& layer) {
  check_input(x.h(), x.w());
  const int idx = net_.find(layer);
  const auto names = feature_layer_names(spec_);
  if (idx < 0 || std::find(names.begin(), names.end(), layer) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    fail("precondition", "unknown feature layer '" + layer + "' (known: " + known + ")");
  }
  return net_.forward_prefix(x, static_cast<std::size_t>(idx) + 1, Mode::inference);
}

template <typename T>
void Generator<T>::initialize(Rng& rng) {
  initialize_normal(net_, rng, 0.02);
}

template <typename T>
void Generator<T>::load(const NetworkWeights& weights, const std::string& prefix) {
  import_state(net_, weights, prefix);
}

template <typename T>
NetworkWeights Generator<T>::save() const {
  NetworkWeights w;
  export_state(const_cast<Sequential<T>&>(net_), w);
  w.metadata["kind"] = "generator";
  w.metadata["generator.spec"] = spec_.canonical();
  w.metadata["generator.spec_hash"] = hex64([&] {
    Fnv1a h;
    h.update(spec_.canonical());
    return h.digest();
  }());
  return w;
}

template class Generator<float>;
template class Generator<double>;

NetworkWeights build_generator(const GeneratorSpec& spec, Rng& rng) {
  Generator<float> g(spec);
  g.initialize(rng);
  return g.save();
}

ImagePlane generator_forward(const NetworkWeights& weights, const GeneratorSpec& spec,
                             const ImagePlane& img) {
  Generator<float> g(spec);
  g.load(weights);
  return ImagePlane::from_tensor(g.forward(img.tensor(), Mode::inference));
}

GeneratorSpec generator_spec_of(const NetworkWeights& weights) {
  const auto it = weights.metadata.find("generator.spec");
  if (it == weights.metadata.end()) {
    fail("mismatch", "archive does not describe a generator (no generator.spec metadata)");
  }
  return GeneratorSpec::parse(it->second);
}

namespace {

Tensor stage_output(const NetworkWeights& weights, const GeneratorSpec& spec, const ImagePlane& img,
                    const std::string& layer) {
  Generator<float> g(spec);
  g.load(weights);
  return g.features(img.tensor(), layer);
}

}  // namespace

ImagePlane visualize_features(const NetworkWeights& weights, const GeneratorSpec& spec,
                              const ImagePlane& img, const std::string& layer, int channel) {
  const Tensor f = stage_output(weights, spec, img, layer);
  if (channel >= f.c()) {
    fail("precondition", "channel " + std::to_string(channel) + " out of range for layer '" + layer +
                             "' with " + std::to_string(f.c()) + " channels");
  }
  const int h = f.h();
  const int w = f.w();
  std::vector<double> map(static_cast<std::size_t>(h) * w, 0.0);
  for (int c = 0; c < f.c(); ++c) {
    if (channel >= 0 && c != channel) continue;
    const float* p = f.plane(0, c);
    for (std::size_t i = 0; i < map.size(); ++i) map[i] += p[i];
  }
  const double count = channel >= 0 ? 1.0 : f.c();
  for (auto& v : map) v /= count;
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double range = *hi - *lo;
  ImagePlane out(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = map[static_cast<std::size_t>(y) * w + x];
      const float g = range > 0.0 ? static_cast<float>(2.0 * (v - *lo) / range - 1.0) : 0.0f;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = g;
    }
  }
  return out;
}

double feature_map_difference(const NetworkWeights& weights, const GeneratorSpec& spec,
                              const ImagePlane& img, const std::string& layer_a,
                              const std::string& layer_b) {
  const Tensor a = stage_output(weights, spec, img, layer_a);
  const Tensor b = stage_output(weights, spec, img, layer_b);
  require_same_shape(a, b, "feature_map_difference");
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    diff += d * d;
    norm += static_cast<double>(b[i]) * b[i];
  }
  return norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
}

}  // namespace texpand

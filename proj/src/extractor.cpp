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

#include "texpand/extractor.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace texpand {
namespace {

// Convolutions per stage; each stage ends at one tap.
constexpr std::array<int, 5> kStageConvs{1, 2, 2, 4, 4};

std::string join(const std::array<double, 3>& v) {
  std::ostringstream s;
  s.precision(17);
  s << v[0] << "," << v[1] << "," << v[2];
  return s.str();
}

std::array<double, 3> parse_triple(const NetworkWeights& w, const std::string& key,
                                   const std::array<double, 3>& fallback) {
  const auto it = w.metadata.find(key);
  if (it == w.metadata.end()) return fallback;
  std::array<double, 3> v{};
  char c1 = 0, c2 = 0;
  std::istringstream s(it->second);
  if (!(s >> v[0] >> c1 >> v[1] >> c2 >> v[2]) || c1 != ',' || c2 != ',') {
    fail("format", "extractor metadata '" + key + "' is not three comma-separated numbers");
  }
  return v;
}

}  // namespace

template <typename T>
const std::vector<std::string>& FeatureExtractor<T>::conv_names() {
  static const std::vector<std::string> names{
      "conv1_1", "conv1_2", "conv2_1", "conv2_2", "conv3_1", "conv3_2", "conv3_3",
      "conv3_4", "conv4_1", "conv4_2", "conv4_3", "conv4_4", "conv5_1"};
  return names;
}

template <typename T>
FeatureExtractor<T>::FeatureExtractor(const std::vector<int>& widths, std::array<double, 3> mean,
                                      std::array<double, 3> stddev)
    : mean_(mean), std_(stddev) {
  const auto& names = conv_names();
  if (widths.size() != names.size()) {
    fail("shape", "extractor needs " + std::to_string(names.size()) + " convolution widths");
  }
  for (double s : std_) {
    if (!(s > 0.0)) fail("format", "extractor normalization scales must be positive");
  }
  std::size_t conv = 0;
  int cin = 3;
  for (std::size_t stage = 0; stage < kStageConvs.size(); ++stage) {
    auto seq = std::make_unique<Sequential<T>>("stage" + std::to_string(stage + 1));
    for (int i = 0; i < kStageConvs[stage]; ++i, ++conv) {
      const std::string& name = names[conv];
      // A new block starts with pooling (except the very first convolution).
      if (name.ends_with("_1") && conv > 0) {
        seq->template emplace<MaxPool2d<T>>("pool" + std::string(1, name[4] - 1));
      }
      seq->template emplace<Conv2d<T>>(name, cin, widths[conv], 3, 1, 1, kernels::Padding::zero, true);
      seq->template emplace<Pointwise<T>>("relu" + name.substr(4), Activation::relu);
      cin = widths[conv];
    }
    tap_channels_.push_back(cin);
    seq->set_frozen(true);
    stages_.push_back(std::move(seq));
  }
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::from_weights(const NetworkWeights& weights) {
  std::vector<int> widths;
  for (const auto& name : conv_names()) {
    const auto it = weights.entries.find(name + ".weight");
    if (it == weights.entries.end()) {
      fail("format", "extractor archive lacks '" + name + ".weight'");
    }
    widths.push_back(it->second.n());
  }
  FeatureExtractor ex(widths, parse_triple(weights, "extractor.mean", kImageNetMean),
                      parse_triple(weights, "extractor.std", kImageNetStd));
  for (auto& stage : ex.stages_) import_state(*stage, weights);
  return ex;
}

template <typename T>
std::vector<BasicTensor<T>> FeatureExtractor<T>::forward(const BasicTensor<T>& x, bool record) {
  if (x.c() != 3) fail("shape", "extractor expects 3-channel input");
  BasicTensor<T> h(x.shape());
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < 3; ++c) {
      const T a = static_cast<T>(0.5 / std_[c]);
      const T b = static_cast<T>((0.5 - mean_[c]) / std_[c]);
      const T* src = x.plane(n, c);
      T* dst = h.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = a * src[i] + b;
    }
  }
  const Mode mode = record ? Mode::eval : Mode::inference;
  std::vector<BasicTensor<T>> taps;
  for (auto& stage : stages_) {
    h = stage->forward(h, mode);
    taps.push_back(h);
  }
  return taps;
}

template <typename T>
BasicTensor<T> FeatureExtractor<T>::backward(const std::vector<BasicTensor<T>>& tap_grads) {
  if (tap_grads.size() != stages_.size()) fail("shape", "extractor backward needs one gradient per tap");
  BasicTensor<T> g;
  for (std::size_t i = stages_.size(); i-- > 0;) {
    const auto& tg = tap_grads[i];
    if (g.empty()) {
      g = tg;
    } else if (!tg.empty()) {
      require_same_shape(g, tg, "extractor tap gradient");
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += tg[j];
    }
    if (g.empty()) continue;
    g = stages_[i]->backward(g, true);
  }
  if (g.empty()) fail("state", "extractor backward called with all-zero tap gradients");
  const std::size_t plane = static_cast<std::size_t>(g.h()) * g.w();
  for (int n = 0; n < g.n(); ++n) {
    for (int c = 0; c < 3; ++c) {
      const T a = static_cast<T>(0.5 / std_[c]);
      T* p = g.plane(n, c);
      for (std::size_t j = 0; j < plane; ++j) p[j] *= a;
    }
  }
  return g;
}

template <typename T>
std::vector<int> FeatureExtractor<T>::tap_channels() const {
  return tap_channels_;
}

template <typename T>
std::vector<Param<T>*> FeatureExtractor<T>::parameters() {
  std::vector<Param<T>*> out;
  for (auto& s : stages_) s->collect_parameters(out);
  return out;
}

template class FeatureExtractor<float>;
template class FeatureExtractor<double>;

std::vector<int> vgg19_widths(int width_divisor) {
  if (width_divisor < 1 || 64 % width_divisor != 0) {
    fail("range", "extractor width divisor must divide 64, got " + std::to_string(width_divisor));
  }
  const std::vector<int> full{64, 64, 128, 128, 256, 256, 256, 256, 512, 512, 512, 512, 512};
  std::vector<int> out;
  for (int w : full) out.push_back(w / width_divisor);
  return out;
}

NetworkWeights load_extractor(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail("io", "extractor weights not found at '" + path.string() +
                   "'. Convert the torchvision VGG-19 weights with scripts/fetch_vgg19.py, or "
                   "create a random stand-in with `texpand init-extractor`.");
  }
  NetworkWeights w = load_weights(path);
  const auto kind = w.metadata.find("kind");
  if (kind == w.metadata.end() || kind->second != "extractor") {
    fail("format", "'" + path.string() + "' is not an extractor archive");
  }
  // Validates names and shapes.
  FeatureExtractor<float>::from_weights(w);
  return w;
}

NetworkWeights make_standin_extractor(int width_divisor, std::uint64_t seed) {
  FeatureExtractor<float> ex(vgg19_widths(width_divisor), kImageNetMean, kImageNetStd);
  Rng rng(seed);
  for (Param<float>* p : ex.parameters()) {
    if (p->name.ends_with(".bias")) {
      p->value.fill(0.0f);
      continue;
    }
    const double fan_in = static_cast<double>(p->value.c()) * p->value.h() * p->value.w();
    const double sd = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<float>(normal(rng, 0.0, sd));
  }
  NetworkWeights w;
  for (Param<float>* p : ex.parameters()) w.entries[p->name] = p->value;
  w.metadata["kind"] = "extractor";
  w.metadata["extractor.source"] = "standin";
  w.metadata["extractor.width_divisor"] = std::to_string(width_divisor);
  w.metadata["extractor.seed"] = std::to_string(seed);
  w.metadata["extractor.mean"] = join(kImageNetMean);
  w.metadata["extractor.std"] = join(kImageNetStd);
  return w;
}

}  // namespace texpand

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

#include <memory>
#include <string>
#include <vector>

#include "texpand/kernels.hpp"
#include "texpand/random.hpp"
#include "texpand/tensor.hpp"

namespace texpand {

// train:     batch statistics, activations recorded for backward.
// eval:      running statistics, activations recorded (gradient analysis,
//            frozen feature extractors inside a loss).
// inference: running statistics, nothing recorded.
enum class Mode { train, eval, inference };

template <typename T>
struct Param {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
};

template <typename T>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  virtual BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) = 0;
  // Accumulates parameter gradients unless frozen. Returns dL/dx when
  // `input_grad` is set, otherwise an empty tensor.
  virtual BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) = 0;

  virtual void collect_parameters(std::vector<Param<T>*>&) {}
  virtual void collect_buffers(std::vector<Param<T>*>&) {}
  virtual void set_frozen(bool frozen) { frozen_ = frozen; }

  const std::string& name() const { return name_; }
  bool frozen() const { return frozen_; }

 protected:
  std::string name_;
  bool frozen_ = false;
};

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::string name, int cin, int cout, int kernel, int stride, int pad,
         kernels::Padding padding, bool bias);

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;
  void collect_parameters(std::vector<Param<T>*>& out) override;

  Param<T>& weight() { return weight_; }
  bool has_bias() const { return has_bias_; }
  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }

 private:
  kernels::ConvGeometry geometry(int h, int w) const;

  int cin_, cout_, kernel_, stride_, pad_;
  kernels::Padding padding_;
  bool has_bias_;
  Param<T> weight_;
  Param<T> bias_;
  BasicTensor<T> input_;
};

// Stride-s transposed convolution whose output is exactly s times the input
// in each dimension (padding (kernel - 1) / 2 with matching output padding).
template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(std::string name, int cin, int cout, int kernel, int stride, bool bias);

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;
  void collect_parameters(std::vector<Param<T>*>& out) override;

  Param<T>& weight() { return weight_; }

 private:
  kernels::ConvGeometry geometry(int in_h, int in_w) const;

  int cin_, cout_, kernel_, stride_;
  bool has_bias_;
  Param<T> weight_;
  Param<T> bias_;
  BasicTensor<T> input_;
};

template <typename T>
class BatchNorm2d final : public Layer<T> {
 public:
  BatchNorm2d(std::string name, int channels, double eps = 1e-5, double momentum = 0.1);

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;
  void collect_parameters(std::vector<Param<T>*>& out) override;
  void collect_buffers(std::vector<Param<T>*>& out) override;

  Param<T>& scale() { return scale_; }
  Param<T>& offset() { return offset_; }

 private:
  int channels_;
  double eps_, momentum_;
  Param<T> scale_;
  Param<T> offset_;
  Param<T> running_mean_;
  Param<T> running_var_;
  BasicTensor<T> normalized_;
  std::vector<T> inv_std_;
  bool batch_stats_ = true;
};

enum class Activation { relu, leaky_relu, tanh, sigmoid };

template <typename T>
class Pointwise final : public Layer<T> {
 public:
  Pointwise(std::string name, Activation kind, T slope = T(0.2));

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;

 private:
  Activation kind_;
  T slope_;
  BasicTensor<T> cache_;  // input for (leaky) relu, output for tanh/sigmoid
};

// 2x2 max pooling with stride 2.
template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  explicit MaxPool2d(std::string name) : Layer<T>(std::move(name)) {}

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;

 private:
  Shape4 in_shape_{};
  std::vector<std::size_t> argmax_;
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  explicit Sequential(std::string name) : Layer<T>(std::move(name)) {}

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  void append(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;
  void collect_parameters(std::vector<Param<T>*>& out) override;
  void collect_buffers(std::vector<Param<T>*>& out) override;
  void set_frozen(bool frozen) override;

  // Runs layers [0, count) and returns the intermediate.
  BasicTensor<T> forward_prefix(const BasicTensor<T>& x, std::size_t count, Mode mode);
  // Index of the direct child with this name, or -1.
  int find(const std::string& child) const;

  std::size_t size() const { return layers_.size(); }
  Layer<T>& at(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// y = x + body(x)
template <typename T>
class Residual final : public Layer<T> {
 public:
  explicit Residual(std::string name) : Layer<T>(name), body_(name) {}

  Sequential<T>& body() { return body_; }

  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> backward(const BasicTensor<T>& grad, bool input_grad) override;
  void collect_parameters(std::vector<Param<T>*>& out) override { body_.collect_parameters(out); }
  void collect_buffers(std::vector<Param<T>*>& out) override { body_.collect_buffers(out); }
  void set_frozen(bool frozen) override;

 private:
  Sequential<T> body_;
};

template <typename T>
std::vector<Param<T>*> parameters_of(Layer<T>& layer) {
  std::vector<Param<T>*> out;
  layer.collect_parameters(out);
  return out;
}

// Parameters followed by buffers (e.g. running statistics): the full state
// needed to reproduce the layer's outputs.
template <typename T>
std::vector<Param<T>*> state_of(Layer<T>& layer) {
  std::vector<Param<T>*> out;
  layer.collect_parameters(out);
  layer.collect_buffers(out);
  return out;
}

template <typename T>
void zero_grad(Layer<T>& layer) {
  for (Param<T>* p : parameters_of(layer)) p->grad.fill(T(0));
}

// Convolution weights ~ N(0, stddev^2), biases 0; normalization layers (a
// ".bn" component in the parameter name) get unit scale and zero offset.
template <typename T>
void initialize_normal(Layer<T>& layer, Rng& rng, double stddev = 0.02);

}  // namespace texpand

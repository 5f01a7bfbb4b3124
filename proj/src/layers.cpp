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

#include "texpand/layers.hpp"

#include <cmath>
#include <limits>

namespace texpand {
namespace {

template <typename T>
Param<T> make_param(const std::string& name, Shape4 shape, T fill, bool with_grad = true) {
  Param<T> p{name, BasicTensor<T>(shape, fill), {}};
  if (with_grad) p.grad = BasicTensor<T>(shape);
  return p;
}

bool records(Mode mode) { return mode != Mode::inference; }

void require_recorded(bool recorded, const std::string& layer) {
  if (!recorded) {
    fail("state", "backward through '" + layer + "' without a recorded forward pass");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, int cin, int cout, int kernel, int stride, int pad,
                  kernels::Padding padding, bool bias)
    : Layer<T>(std::move(name)),
      cin_(cin),
      cout_(cout),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      padding_(padding),
      has_bias_(bias) {
  weight_ = make_param<T>(this->name_ + ".weight", {cout, cin, kernel, kernel}, T(0));
  if (has_bias_) bias_ = make_param<T>(this->name_ + ".bias", {cout, 1, 1, 1}, T(0));
}

template <typename T>
kernels::ConvGeometry Conv2d<T>::geometry(int h, int w) const {
  return kernels::ConvGeometry{h, w, kernel_, stride_, pad_, padding_};
}

template <typename T>
BasicTensor<T> Conv2d<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (x.c() != cin_) {
    fail("shape", this->name_ + ": expected " + std::to_string(cin_) + " input channels, got " +
                      std::to_string(x.c()));
  }
  const auto g = geometry(x.h(), x.w());
  BasicTensor<T> y(x.n(), cout_, g.out_h(), g.out_w());
  for (int n = 0; n < x.n(); ++n) {
    kernels::conv2d_forward<T>(x.sample(n), cin_, g, weight_.value.data(), cout_,
                               has_bias_ ? bias_.value.data() : nullptr, y.sample(n));
  }
  if (records(mode)) {
    input_ = x;
  } else {
    input_ = BasicTensor<T>();
  }
  return y;
}

template <typename T>
BasicTensor<T> Conv2d<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  require_recorded(!input_.empty(), this->name_);
  const auto g = geometry(input_.h(), input_.w());
  if (!this->frozen_) {
    for (int n = 0; n < grad.n(); ++n) {
      kernels::conv2d_backward_weight<T>(input_.sample(n), cin_, g, grad.sample(n), cout_,
                                         weight_.grad.data(),
                                         has_bias_ ? bias_.grad.data() : nullptr);
    }
  }
  BasicTensor<T> dx;
  if (input_grad) {
    dx = BasicTensor<T>(input_.shape());
    for (int n = 0; n < grad.n(); ++n) {
      kernels::conv2d_backward_data<T>(grad.sample(n), cout_, g, weight_.value.data(), cin_,
                                       dx.sample(n));
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect_parameters(std::vector<Param<T>*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(std::string name, int cin, int cout, int kernel, int stride,
                                    bool bias)
    : Layer<T>(std::move(name)),
      cin_(cin),
      cout_(cout),
      kernel_(kernel),
      stride_(stride),
      has_bias_(bias) {
  weight_ = make_param<T>(this->name_ + ".weight", {cin, cout, kernel, kernel}, T(0));
  if (has_bias_) bias_ = make_param<T>(this->name_ + ".bias", {cout, 1, 1, 1}, T(0));
}

template <typename T>
kernels::ConvGeometry ConvTranspose2d<T>::geometry(int in_h, int in_w) const {
  kernels::ConvGeometry g{in_h * stride_, in_w * stride_, kernel_, stride_, (kernel_ - 1) / 2,
                          kernels::Padding::zero};
  if (g.out_h() != in_h || g.out_w() != in_w) {
    fail("precondition", this->name_ + ": kernel/stride combination does not scale exactly");
  }
  return g;
}

template <typename T>
BasicTensor<T> ConvTranspose2d<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (x.c() != cin_) {
    fail("shape", this->name_ + ": expected " + std::to_string(cin_) + " input channels, got " +
                      std::to_string(x.c()));
  }
  const auto g = geometry(x.h(), x.w());
  BasicTensor<T> y(x.n(), cout_, g.in_h, g.in_w);
  for (int n = 0; n < x.n(); ++n) {
    kernels::conv_transpose2d_forward<T>(x.sample(n), cin_, g, weight_.value.data(), cout_,
                                         has_bias_ ? bias_.value.data() : nullptr, y.sample(n));
  }
  input_ = records(mode) ? x : BasicTensor<T>();
  return y;
}

template <typename T>
BasicTensor<T> ConvTranspose2d<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  require_recorded(!input_.empty(), this->name_);
  const auto g = geometry(input_.h(), input_.w());
  if (!this->frozen_) {
    for (int n = 0; n < grad.n(); ++n) {
      kernels::conv_transpose2d_backward_weight<T>(input_.sample(n), cin_, g, grad.sample(n),
                                                   cout_, weight_.grad.data(),
                                                   has_bias_ ? bias_.grad.data() : nullptr);
    }
  }
  BasicTensor<T> dx;
  if (input_grad) {
    dx = BasicTensor<T>(input_.shape());
    for (int n = 0; n < grad.n(); ++n) {
      kernels::conv_transpose2d_backward_data<T>(grad.sample(n), cout_, g, weight_.value.data(),
                                                 cin_, dx.sample(n));
    }
  }
  return dx;
}

template <typename T>
void ConvTranspose2d<T>::collect_parameters(std::vector<Param<T>*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::string name, int channels, double eps, double momentum)
    : Layer<T>(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum) {
  scale_ = make_param<T>(this->name_ + ".weight", {channels, 1, 1, 1}, T(1));
  offset_ = make_param<T>(this->name_ + ".bias", {channels, 1, 1, 1}, T(0));
  running_mean_ = make_param<T>(this->name_ + ".running_mean", {channels, 1, 1, 1}, T(0), false);
  running_var_ = make_param<T>(this->name_ + ".running_var", {channels, 1, 1, 1}, T(1), false);
}

template <typename T>
BasicTensor<T> BatchNorm2d<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (x.c() != channels_) {
    fail("shape", this->name_ + ": expected " + std::to_string(channels_) + " channels, got " +
                      std::to_string(x.c()));
  }
  const int batch = x.n();
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  const std::size_t count = plane * batch;
  BasicTensor<T> y(x.shape());
  const bool record = records(mode);
  batch_stats_ = mode == Mode::train;
  if (record) {
    normalized_ = BasicTensor<T>(x.shape());
  } else {
    normalized_ = BasicTensor<T>();
  }
  inv_std_.assign(static_cast<std::size_t>(channels_), T(0));

#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels_; ++c) {
    double mean;
    double var;
    if (batch_stats_) {
      double s = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      mean = s / static_cast<double>(count);
      double q = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          q += d * d;
        }
      }
      var = q / static_cast<double>(count);
      const double unbiased = count > 1 ? q / static_cast<double>(count - 1) : var;
      running_mean_.value[c] =
          static_cast<T>((1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean);
      running_var_.value[c] =
          static_cast<T>((1.0 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = static_cast<T>(inv);
    const T g = scale_.value[c];
    const T b = offset_.value[c];
    const T m = static_cast<T>(mean);
    const T is = static_cast<T>(inv);
    for (int n = 0; n < batch; ++n) {
      const T* p = x.plane(n, c);
      T* o = y.plane(n, c);
      T* h = record ? normalized_.plane(n, c) : nullptr;
      for (std::size_t i = 0; i < plane; ++i) {
        const T xh = (p[i] - m) * is;
        if (h) h[i] = xh;
        o[i] = g * xh + b;
      }
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> BatchNorm2d<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  require_recorded(!normalized_.empty(), this->name_);
  const int batch = grad.n();
  const std::size_t plane = static_cast<std::size_t>(grad.h()) * grad.w();
  const double count = static_cast<double>(plane * batch);
  BasicTensor<T> dx;
  if (input_grad) dx = BasicTensor<T>(grad.shape());

#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xh = 0.0;
    for (int n = 0; n < batch; ++n) {
      const T* dy = grad.plane(n, c);
      const T* xh = normalized_.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xh += static_cast<double>(dy[i]) * xh[i];
      }
    }
    if (!this->frozen_) {
      scale_.grad[c] += static_cast<T>(sum_dy_xh);
      offset_.grad[c] += static_cast<T>(sum_dy);
    }
    if (!input_grad) continue;
    const T k = scale_.value[c] * inv_std_[c];
    if (batch_stats_) {
      const T mean_dy = static_cast<T>(sum_dy / count);
      const T mean_dy_xh = static_cast<T>(sum_dy_xh / count);
      for (int n = 0; n < batch; ++n) {
        const T* dy = grad.plane(n, c);
        const T* xh = normalized_.plane(n, c);
        T* o = dx.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) o[i] = k * (dy[i] - mean_dy - xh[i] * mean_dy_xh);
      }
    } else {
      for (int n = 0; n < batch; ++n) {
        const T* dy = grad.plane(n, c);
        T* o = dx.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) o[i] = k * dy[i];
      }
    }
  }
  return dx;
}

template <typename T>
void BatchNorm2d<T>::collect_parameters(std::vector<Param<T>*>& out) {
  out.push_back(&scale_);
  out.push_back(&offset_);
}

template <typename T>
void BatchNorm2d<T>::collect_buffers(std::vector<Param<T>*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---------------------------------------------------------------------------
// Pointwise activations

template <typename T>
Pointwise<T>::Pointwise(std::string name, Activation kind, T slope)
    : Layer<T>(std::move(name)), kind_(kind), slope_(slope) {}

template <typename T>
BasicTensor<T> Pointwise<T>::forward(const BasicTensor<T>& x, Mode mode) {
  BasicTensor<T> y(x.shape());
  const std::size_t n = x.size();
  const T* in = x.data();
  T* out = y.data();
  switch (kind_) {
    case Activation::relu:
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
      break;
    case Activation::leaky_relu:
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : slope_ * in[i];
      break;
    case Activation::tanh:
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
      break;
    case Activation::sigmoid:
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < n; ++i) out[i] = T(1) / (T(1) + std::exp(-in[i]));
      break;
  }
  if (!records(mode)) {
    cache_ = BasicTensor<T>();
  } else if (kind_ == Activation::relu || kind_ == Activation::leaky_relu) {
    cache_ = x;
  } else {
    cache_ = y;
  }
  return y;
}

template <typename T>
BasicTensor<T> Pointwise<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  require_recorded(!cache_.empty(), this->name_);
  if (!input_grad) return {};
  BasicTensor<T> dx(grad.shape());
  const std::size_t n = grad.size();
  const T* g = grad.data();
  const T* c = cache_.data();
  T* o = dx.data();
  switch (kind_) {
    case Activation::relu:
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < n; ++i) o[i] = c[i] > T(0) ? g[i] : T(0);
      break;
    case Activation::leaky_relu:
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < n; ++i) o[i] = c[i] > T(0) ? g[i] : slope_ * g[i];
      break;
    case Activation::tanh:
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < n; ++i) o[i] = g[i] * (T(1) - c[i] * c[i]);
      break;
    case Activation::sigmoid:
#pragma omp parallel for simd schedule(static)
      for (std::size_t i = 0; i < n; ++i) o[i] = g[i] * c[i] * (T(1) - c[i]);
      break;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d

template <typename T>
BasicTensor<T> MaxPool2d<T>::forward(const BasicTensor<T>& x, Mode mode) {
  const int oh = x.h() / 2;
  const int ow = x.w() / 2;
  if (oh < 1 || ow < 1) fail("precondition", this->name_ + ": plane smaller than the 2x2 window");
  BasicTensor<T> y(x.n(), x.c(), oh, ow);
  const bool record = records(mode);
  in_shape_ = x.shape();
  if (record) {
    argmax_.assign(y.size(), 0);
  } else {
    argmax_.clear();
  }
  const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
  for (int pl = 0; pl < planes; ++pl) {
    const int n = pl / x.c();
    const int c = pl % x.c();
    const T* src = x.plane(n, c);
    T* dst = y.plane(n, c);
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        std::size_t best = static_cast<std::size_t>(2 * oy) * x.w() + 2 * ox;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = static_cast<std::size_t>(2 * oy + dy) * x.w() + 2 * ox + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = static_cast<std::size_t>(oy) * ow + ox;
        dst[o] = src[best];
        if (record) argmax_[y.index(n, c, 0, 0) + o] = best;
      }
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> MaxPool2d<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  require_recorded(!argmax_.empty(), this->name_);
  if (!input_grad) return {};
  BasicTensor<T> dx(in_shape_);
  const std::size_t oplane = static_cast<std::size_t>(grad.h()) * grad.w();
  const int planes = grad.n() * grad.c();
#pragma omp parallel for schedule(static)
  for (int pl = 0; pl < planes; ++pl) {
    const int n = pl / grad.c();
    const int c = pl % grad.c();
    const T* g = grad.plane(n, c);
    T* d = dx.plane(n, c);
    const std::size_t base = grad.index(n, c, 0, 0);
    for (std::size_t o = 0; o < oplane; ++o) d[argmax_[base + o]] += g[o];
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Containers

template <typename T>
BasicTensor<T> Sequential<T>::forward(const BasicTensor<T>& x, Mode mode) {
  return forward_prefix(x, layers_.size(), mode);
}

template <typename T>
BasicTensor<T> Sequential<T>::forward_prefix(const BasicTensor<T>& x, std::size_t count,
                                             Mode mode) {
  if (count == 0) return x;
  BasicTensor<T> h = layers_[0]->forward(x, mode);
  for (std::size_t i = 1; i < count && i < layers_.size(); ++i) h = layers_[i]->forward(h, mode);
  return h;
}

template <typename T>
BasicTensor<T> Sequential<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  BasicTensor<T> g = grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g, i > 0 || input_grad);
  }
  return input_grad ? g : BasicTensor<T>();
}

template <typename T>
void Sequential<T>::collect_parameters(std::vector<Param<T>*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

template <typename T>
void Sequential<T>::collect_buffers(std::vector<Param<T>*>& out) {
  for (auto& l : layers_) l->collect_buffers(out);
}

template <typename T>
void Sequential<T>::set_frozen(bool frozen) {
  this->frozen_ = frozen;
  for (auto& l : layers_) l->set_frozen(frozen);
}

template <typename T>
int Sequential<T>::find(const std::string& child) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->name() == child) return static_cast<int>(i);
  }
  return -1;
}

template <typename T>
BasicTensor<T> Residual<T>::forward(const BasicTensor<T>& x, Mode mode) {
  BasicTensor<T> y = body_.forward(x, mode);
  require_same_shape(x, y, "residual block");
  const std::size_t n = y.size();
  T* o = y.data();
  const T* in = x.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) o[i] += in[i];
  return y;
}

template <typename T>
BasicTensor<T> Residual<T>::backward(const BasicTensor<T>& grad, bool input_grad) {
  BasicTensor<T> d = body_.backward(grad, input_grad);
  if (!input_grad) return {};
  const std::size_t n = d.size();
  T* o = d.data();
  const T* g = grad.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) o[i] += g[i];
  return d;
}

template <typename T>
void Residual<T>::set_frozen(bool frozen) {
  this->frozen_ = frozen;
  body_.set_frozen(frozen);
}

template <typename T>
void initialize_normal(Layer<T>& layer, Rng& rng, double stddev) {
  for (Param<T>* p : parameters_of(layer)) {
    const std::string& n = p->name;
    const bool is_bias = n.ends_with(".bias");
    if (n.find(".bn") != std::string::npos) {
      p->value.fill(is_bias ? T(0) : T(1));
    } else if (is_bias) {
      p->value.fill(T(0));
    } else {
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<T>(normal(rng, 0.0, stddev));
    }
  }
}

template void initialize_normal(Layer<float>&, Rng&, double);
template void initialize_normal(Layer<double>&, Rng&, double);

template class Conv2d<float>;
template class Conv2d<double>;
template class ConvTranspose2d<float>;
template class ConvTranspose2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class Pointwise<float>;
template class Pointwise<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class Sequential<float>;
template class Sequential<double>;
template class Residual<float>;
template class Residual<double>;

}  // namespace texpand

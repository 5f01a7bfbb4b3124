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

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "texpand/error.hpp"

namespace texpand {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

// Dense NCHW tensor with contiguous storage. Value semantics.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  BasicTensor(int n, int c, int h, int w, T fill = T(0))
      : shape_{n, c, h, w}, data_(shape_.numel(), fill) {}
  explicit BasicTensor(Shape4 shape, T fill = T(0))
      : shape_(shape), data_(shape.numel(), fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  T at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  // Pointer to the start of the (n, c) plane.
  T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }
  // Pointer to the start of sample n.
  T* sample(int n) { return data_.data() + index(n, 0, 0, 0); }
  const T* sample(int n) const { return data_.data() + index(n, 0, 0, 0); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  // Reinterprets the storage with a new shape of identical element count.
  void reshape(Shape4 s) {
    if (s.numel() != data_.size()) {
      fail("shape", "reshape " + shape_.str() + " -> " + s.str() + " changes element count");
    }
    shape_ = s;
  }

  template <typename U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

 private:
  Shape4 shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    fail("shape", std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                      b.shape().str());
  }
}

}  // namespace texpand

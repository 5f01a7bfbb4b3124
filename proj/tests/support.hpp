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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "texpand/image.hpp"
#include "texpand/random.hpp"
#include "texpand/tensor.hpp"

namespace texpand::test {

template <typename T>
BasicTensor<T> random_tensor(Shape4 shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  BasicTensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(lo + (hi - lo) * uniform01(rng));
  return t;
}

inline ImagePlane random_image(int c, int h, int w, std::uint64_t seed) {
  return ImagePlane::from_tensor(random_tensor<float>({1, c, h, w}, seed));
}

// max |a - b| / max(1, max |b|)
template <typename A, typename B>
double max_rel_diff(const A* a, const B* b, std::size_t n) {
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    scale = std::max(scale, std::abs(static_cast<double>(b[i])));
  }
  return diff / scale;
}

template <typename T>
double max_rel_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return max_rel_diff(a.data(), b.data(), a.size());
}

// ||a - b||_2 / ||a||_2
inline double relative_l2(const std::vector<double>& reference, const std::vector<double>& other) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    num += (reference[i] - other[i]) * (reference[i] - other[i]);
    den += reference[i] * reference[i];
  }
  return std::sqrt(num / den);
}

// Central differences of f at x along the given coordinates.
template <typename T>
std::vector<double> central_differences(const std::function<double(const BasicTensor<T>&)>& f,
                                        BasicTensor<T> x, const std::vector<std::size_t>& coords,
                                        double step) {
  std::vector<double> out;
  for (std::size_t i : coords) {
    const T saved = x[i];
    x[i] = static_cast<T>(saved + step);
    const double up = f(x);
    x[i] = static_cast<T>(saved - step);
    const double down = f(x);
    x[i] = saved;
    out.push_back((up - down) / (2.0 * step));
  }
  return out;
}

inline std::vector<std::size_t> all_coords(std::size_t n) {
  std::vector<std::size_t> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = i;
  return c;
}

// Evenly spread coordinates, at most `count` of them.
inline std::vector<std::size_t> spread_coords(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (n <= count) return all_coords(n);
  Rng rng(seed);
  std::vector<std::size_t> c;
  for (std::size_t i = 0; i < count; ++i) {
    c.push_back(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1)));
  }
  return c;
}

// Fresh, empty scratch directory unique to this process.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("texpand_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace texpand::test

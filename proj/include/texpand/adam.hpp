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

#include "texpand/layers.hpp"
#include "texpand/weights.hpp"

namespace texpand {

// Bias-corrected Adam over a fixed parameter list.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Param<T>*> params, double beta1, double beta2, double epsilon);

  void step(double lr);
  long steps() const { return t_; }

  // Moments as "<prefix>m/<param>" and "<prefix>v/<param>" entries plus a
  // "<prefix>t" metadata field.
  void save(NetworkWeights& out, const std::string& prefix) const;
  void load(const NetworkWeights& in, const std::string& prefix);

 private:
  std::vector<Param<T>*> params_;
  std::vector<BasicTensor<T>> m_;
  std::vector<BasicTensor<T>> v_;
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
};

}  // namespace texpand

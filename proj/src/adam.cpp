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

#include "texpand/adam.hpp"

#include <cmath>

namespace texpand {

template <typename T>
Adam<T>::Adam(std::vector<Param<T>*> params, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (Param<T>* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const T b1 = static_cast<T>(beta1_);
  const T b2 = static_cast<T>(beta2_);
  const T step = static_cast<T>(lr / c1);
  const T root_c2 = static_cast<T>(std::sqrt(c2));
  const T eps = static_cast<T>(epsilon_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    T* w = params_[k]->value.data();
    const T* g = params_[k]->grad.data();
    T* m = m_[k].data();
    T* v = v_[k].data();
    const std::size_t n = params_[k]->value.size();
#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i]) / root_c2 + eps);
    }
  }
}

template <typename T>
void Adam<T>::save(NetworkWeights& out, const std::string& prefix) const {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    out.entries[prefix + "m/" + params_[k]->name] = m_[k].template cast<float>();
    out.entries[prefix + "v/" + params_[k]->name] = v_[k].template cast<float>();
  }
  out.metadata[prefix + "t"] = std::to_string(t_);
}

template <typename T>
void Adam<T>::load(const NetworkWeights& in, const std::string& prefix) {
  auto restore = [&](const std::string& key, BasicTensor<T>& dst) {
    const auto it = in.entries.find(key);
    if (it == in.entries.end()) fail("mismatch", "checkpoint lacks optimizer entry '" + key + "'");
    if (it->second.size() != dst.size()) fail("mismatch", "optimizer entry '" + key + "' has the wrong size");
    dst = it->second.template cast<T>();
  };
  for (std::size_t k = 0; k < params_.size(); ++k) {
    restore(prefix + "m/" + params_[k]->name, m_[k]);
    restore(prefix + "v/" + params_[k]->name, v_[k]);
    m_[k].reshape(params_[k]->value.shape());
    v_[k].reshape(params_[k]->value.shape());
  }
  const auto it = in.metadata.find(prefix + "t");
  if (it == in.metadata.end()) fail("mismatch", "checkpoint lacks optimizer step count '" + prefix + "t'");
  t_ = std::stol(it->second);
}

template class Adam<float>;
template class Adam<double>;

}  // namespace texpand

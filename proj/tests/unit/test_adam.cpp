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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "texpand/adam.hpp"

using namespace texpand;

namespace {

// Scalar Adam with bias correction, written out step by step.
struct ScalarAdam {
  double m = 0.0, v = 0.0, x;
  int t = 0;
  void step(double g, double lr, double b1, double b2, double eps) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_CASE("updates match a scalar bias-corrected oracle") {
  Param<double> p{"w", test::random_tensor<double>({1, 1, 2, 3}, 1), BasicTensor<double>(1, 1, 2, 3)};
  std::vector<ScalarAdam> oracle;
  for (std::size_t i = 0; i < p.value.size(); ++i) oracle.push_back({0.0, 0.0, p.value[i]});
  Adam<double> adam({&p}, 0.5, 0.999, 1e-8);
  for (int s = 0; s < 20; ++s) {
    const auto g = test::random_tensor<double>(p.value.shape(), 100 + s);
    p.grad = g;
    const double lr = s < 10 ? 2e-4 : 1e-3;
    adam.step(lr);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      oracle[i].step(g[i], lr, 0.5, 0.999, 1e-8);
      CHECK(p.value[i] == doctest::Approx(oracle[i].x).epsilon(1e-12));
    }
  }
  CHECK(adam.steps() == 20);
}

TEST_CASE("the first step moves each weight by about lr against the gradient sign") {
  Param<float> p{"w", BasicTensor<float>(1, 1, 1, 3, 1.0f), BasicTensor<float>(1, 1, 1, 3)};
  p.grad[0] = 5.0f;
  p.grad[1] = -0.01f;
  p.grad[2] = 0.0f;
  Adam<float> adam({&p}, 0.5, 0.999, 1e-8);
  adam.step(2e-4);
  CHECK(p.value[0] == doctest::Approx(1.0 - 2e-4).epsilon(1e-6));
  CHECK(p.value[1] == doctest::Approx(1.0 + 2e-4).epsilon(1e-6));
  CHECK(p.value[2] == 1.0f);
}

TEST_CASE("state saves and restores so that continued updates are identical") {
  auto make = [] {
    return Param<float>{"layer.w", test::random_tensor<float>({1, 2, 2, 2}, 3), BasicTensor<float>(1, 2, 2, 2)};
  };
  Param<float> a = make(), b = make();
  Adam<float> adam_a({&a}, 0.5, 0.999, 1e-8);
  for (int s = 0; s < 3; ++s) {
    a.grad = test::random_tensor<float>(a.value.shape(), 10 + s);
    adam_a.step(1e-3);
  }
  NetworkWeights saved;
  adam_a.save(saved, "adam.");
  CHECK(saved.entries.count("adam.m/layer.w") == 1);
  CHECK(saved.entries.count("adam.v/layer.w") == 1);
  b.value = a.value;
  Adam<float> adam_b({&b}, 0.5, 0.999, 1e-8);
  adam_b.load(saved, "adam.");
  CHECK(adam_b.steps() == 3);
  for (int s = 0; s < 3; ++s) {
    a.grad = b.grad = test::random_tensor<float>(a.value.shape(), 20 + s);
    adam_a.step(1e-3);
    adam_b.step(1e-3);
  }
  CHECK(std::equal(a.value.data(), a.value.data() + a.value.size(), b.value.data()));
  NetworkWeights empty;
  CHECK_THROWS_AS(adam_b.load(empty, "adam."), Error);
}

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
#include "texpand/losses.hpp"

using namespace texpand;
using D = double;

namespace {

// Direct triple loop: G[i][j] = sum_p F[i][p] F[j][p] / (H W).
std::vector<double> gram_oracle(const BasicTensor<D>& f) {
  const int c = f.c();
  const int hw = f.h() * f.w();
  std::vector<double> g(static_cast<std::size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double s = 0.0;
      for (int p = 0; p < hw; ++p) s += f.plane(0, i)[p] * f.plane(0, j)[p];
      g[static_cast<std::size_t>(i) * c + j] = s / hw;
    }
  return g;
}

FeatureExtractor<D> narrow_extractor() {
  return FeatureExtractor<D>::from_weights(make_standin_extractor(16, 3));
}

}  // namespace

TEST_CASE("gram matrix matches the loop oracle and is symmetric") {
  for (auto shape : {Shape4{1, 5, 7, 3}, Shape4{1, 16, 9, 9}, Shape4{1, 1, 1, 1}}) {
    const auto f = test::random_tensor<D>(shape, 1);
    const auto g = gram_matrix(f);
    const auto expect = gram_oracle(f);
    CHECK(test::max_rel_diff(g.data(), expect.data(), expect.size()) < 1e-6);
    for (int i = 0; i < f.c(); ++i)
      for (int j = 0; j < f.c(); ++j) CHECK(g.at(0, 0, i, j) == g.at(0, 0, j, i));
  }
  CHECK_THROWS_AS(gram_matrix(test::random_tensor<D>({2, 3, 4, 4}, 1)), Error);
}

TEST_CASE("gram of a constant map is c squared everywhere") {
  for (double c : {0.5, -2.0, 3.0}) {
    const BasicTensor<D> f(1, 4, 6, 5, c);
    const auto g = gram_matrix(f);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(c * c));
  }
}

TEST_CASE("gram backward matches central differences") {
  const auto f = test::random_tensor<D>({1, 4, 3, 5}, 2);
  const auto r = test::random_tensor<D>({1, 1, 4, 4}, 3);  // not symmetric on purpose
  auto loss = [&](const BasicTensor<D>& x) {
    const auto g = gram_matrix(x);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * r[i];
    return s;
  };
  const auto an = gram_backward(f, r);
  const auto fd = test::central_differences<D>(loss, f, test::all_coords(f.size()), 1e-6);
  CHECK(test::relative_l2(fd, std::vector<double>(an.data(), an.data() + an.size())) < 1e-8);
}

TEST_CASE("L1 is the mean absolute difference with a sign gradient") {
  BasicTensor<D> a(1, 1, 1, 4), b(1, 1, 1, 4);
  a[0] = 1.0, a[1] = -1.0, a[2] = 0.5, a[3] = 0.0;
  b[0] = 0.0, b[1] = 1.0, b[2] = 0.5, b[3] = -0.25;
  BasicTensor<D> g;
  CHECK(l1_loss(a, b, &g) == doctest::Approx((1.0 + 2.0 + 0.0 + 0.25) / 4));
  CHECK(g[0] == doctest::Approx(0.25));
  CHECK(g[1] == doctest::Approx(-0.25));
  CHECK(g[3] == doctest::Approx(0.25));
  CHECK(l1_loss(a, a) == 0.0);
  const ImagePlane x = test::random_image(3, 8, 8, 1);
  CHECK(l1_loss(x, x) == 0.0);
  CHECK_THROWS_AS(l1_loss(a, BasicTensor<D>(1, 1, 1, 3)), Error);
}

TEST_CASE("binary cross-entropy values, clamping and gradients") {
  const BasicTensor<D> half(1, 1, 3, 3, 0.5);
  CHECK(binary_cross_entropy(half, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(binary_cross_entropy(half, 0.0) == doctest::Approx(std::log(2.0)));
  const auto adv = adversarial_losses(half, half);
  CHECK(adv.loss_D == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(adv.loss_G == doctest::Approx(std::log(2.0)));
  // Saturated probabilities stay finite.
  const BasicTensor<D> zero(1, 1, 2, 2, 0.0);
  CHECK(binary_cross_entropy(zero, 1.0) == doctest::Approx(-std::log(kProbabilityEpsilon)));
  CHECK(std::isfinite(binary_cross_entropy(BasicTensor<D>(1, 1, 1, 1, 1.0), 0.0)));

  const auto p = test::random_tensor<D>({1, 1, 3, 4}, 5, 0.05, 0.95);
  for (double label : {0.0, 1.0}) {
    BasicTensor<D> g;
    binary_cross_entropy(p, label, &g);
    auto f = [&](const BasicTensor<D>& x) { return binary_cross_entropy(x, label); };
    const auto fd = test::central_differences<D>(f, p, test::all_coords(p.size()), 1e-7);
    CHECK(test::relative_l2(fd, std::vector<double>(g.data(), g.data() + g.size())) < 1e-6);
  }
}

TEST_CASE("style layer weights are 1000 / C^2 for the nominal widths") {
  const StyleLayerSet s = StyleLayerSet::standard();
  CHECK(s.layers == std::vector<std::string>{"relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1"});
  const double rounded[] = {0.244, 0.061, 0.015, 0.004, 0.004};
  for (int i = 0; i < 5; ++i) CHECK(std::round(s.weights[i] * 1000.0) / 1000.0 == doctest::Approx(rounded[i]));
}

TEST_CASE("style loss is zero against itself and matches a tap-by-tap oracle") {
  auto ex = narrow_extractor();
  const StyleLayerSet layers = StyleLayerSet::standard();
  const auto a = test::random_tensor<D>({2, 3, 32, 32}, 1);
  const auto b = test::random_tensor<D>({2, 3, 32, 32}, 2);
  CHECK(style_loss(ex, a, a, layers) == 0.0);

  const auto fa = ex.forward(a, false);
  const auto fb = ex.forward(b, false);
  double expect = 0.0;
  for (int t = 0; t < 5; ++t) {
    for (int n = 0; n < 2; ++n) {
      BasicTensor<D> sa(1, fa[t].c(), fa[t].h(), fa[t].w()), sb(sa.shape());
      std::copy(fa[t].sample(n), fa[t].sample(n) + sa.size(), sa.data());
      std::copy(fb[t].sample(n), fb[t].sample(n) + sb.size(), sb.data());
      const auto ga = gram_oracle(sa);
      const auto gb = gram_oracle(sb);
      double sq = 0.0;
      for (std::size_t i = 0; i < ga.size(); ++i) sq += (ga[i] - gb[i]) * (ga[i] - gb[i]);
      expect += layers.weights[t] * sq / static_cast<double>(ga.size()) / 2.0;
    }
  }
  CHECK(style_loss(ex, a, b, layers) == doctest::Approx(expect).epsilon(1e-10));
  CHECK_THROWS_AS(style_loss(ex, a, b, StyleLayerSet{{"relu9_9"}, {1.0}}), Error);
}

TEST_CASE("style loss gradient matches central differences in double precision") {
  auto ex = narrow_extractor();
  StyleLayerSet layers = StyleLayerSet::standard();
  for (auto& w : layers.weights) w *= 100.0;  // keep the signal well above rounding
  const auto real = test::random_tensor<D>({1, 3, 32, 32}, 4, -0.9, 0.9);
  const auto fake = test::random_tensor<D>({1, 3, 32, 32}, 5, -0.9, 0.9);
  BasicTensor<D> grad;
  style_loss(ex, fake, real, layers, &grad);
  auto f = [&](const BasicTensor<D>& x) { return style_loss(ex, x, real, layers); };
  const auto coords = test::spread_coords(fake.size(), 80, 6);
  const auto fd = test::central_differences<D>(f, fake, coords, 1e-5);
  std::vector<double> an;
  for (std::size_t i : coords) an.push_back(grad[i]);
  CHECK(test::relative_l2(fd, an) < 1e-5);
}

TEST_CASE("the weighted objective drops disabled terms") {
  LossReport r;
  r.adv_G = 0.7;
  r.l1 = 0.2;
  r.style = 3.0;
  LossWeights w;
  CHECK(total_objective(r, w) == doctest::Approx(0.7 + 20.0 + 3.0));
  w.enable_adv = false;
  CHECK(total_objective(r, w) == doctest::Approx(23.0));
  w.enable_l1 = false;
  w.enable_style = false;
  CHECK(total_objective(r, w) == 0.0);
  r.style = std::nan("");
  CHECK_FALSE(r.finite());
}

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
#include "texpand/layers.hpp"

using namespace texpand;
using kernels::Padding;
using D = double;

namespace {

// Loss = <r, layer(x)> for a fixed random r. Checks dL/dx and dL/dparams
// against central differences.
void check_gradients(Layer<D>& layer, const BasicTensor<D>& x, Mode mode, double tol = 1e-6) {
  const BasicTensor<D> probe = layer.forward(x, mode);
  const auto r = test::random_tensor<D>(probe.shape(), 99);
  auto loss = [&](const BasicTensor<D>& in) {
    const BasicTensor<D> y = layer.forward(in, mode);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
  };

  zero_grad(layer);
  layer.forward(x, mode);
  const BasicTensor<D> gx = layer.backward(r, true);
  const auto fd_x = test::central_differences<D>(loss, x, test::all_coords(x.size()), 1e-5);
  std::vector<double> an_x(gx.data(), gx.data() + gx.size());
  CHECK(test::relative_l2(fd_x, an_x) < tol);

  for (Param<D>* p : parameters_of(layer)) {
    CAPTURE(p->name);
    const BasicTensor<D> analytic = p->grad;
    std::vector<double> fd;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const D saved = p->value[i];
      p->value[i] = saved + 1e-5;
      const double up = loss(x);
      p->value[i] = saved - 1e-5;
      const double down = loss(x);
      p->value[i] = saved;
      fd.push_back((up - down) / 2e-5);
    }
    std::vector<double> an(analytic.data(), analytic.data() + analytic.size());
    CHECK(test::relative_l2(fd, an) < tol);
  }
}

template <typename L>
void randomize(L& layer, std::uint64_t seed) {
  for (Param<D>* p : parameters_of(layer)) p->value = test::random_tensor<D>(p->value.shape(), seed++, -0.5, 0.5);
}

}  // namespace

TEST_CASE("conv2d gradients (zero and reflect padding, stride 1 and 2)") {
  for (auto [stride, padding, bias] : {std::tuple{1, Padding::zero, true}, {1, Padding::reflect, false},
                                       {2, Padding::reflect, true}, {2, Padding::zero, false}}) {
    Conv2d<D> conv("c", 2, 3, 3, stride, 1, padding, bias);
    randomize(conv, 5);
    check_gradients(conv, test::random_tensor<D>({2, 2, 6, 5}, 1), Mode::eval);
  }
}

TEST_CASE("transposed conv gradients and exact doubling") {
  ConvTranspose2d<D> deconv("t", 3, 2, 3, 2, true);
  randomize(deconv, 7);
  const auto x = test::random_tensor<D>({1, 3, 4, 5}, 2);
  const auto y = deconv.forward(x, Mode::inference);
  CHECK(y.h() == 8);
  CHECK(y.w() == 10);
  check_gradients(deconv, x, Mode::eval);
}

TEST_CASE("batch norm gradients in training mode") {
  BatchNorm2d<D> bn("bn", 3);
  randomize(bn, 11);
  check_gradients(bn, test::random_tensor<D>({2, 3, 4, 3}, 3), Mode::train, 1e-5);
}

TEST_CASE("batch norm running statistics use momentum and the unbiased variance") {
  BatchNorm2d<D> bn("bn", 1, 1e-5, 0.1);
  BasicTensor<D> x(1, 1, 1, 4);
  for (int i = 0; i < 4; ++i) x[i] = i;  // mean 1.5, unbiased var 5/3
  const auto y = bn.forward(x, Mode::train);
  std::vector<Param<D>*> buffers;
  bn.collect_buffers(buffers);
  REQUIRE(buffers.size() == 2);
  CHECK(buffers[0]->value[0] == doctest::Approx(0.1 * 1.5));
  CHECK(buffers[1]->value[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
  // Batch statistics normalize with the biased variance.
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < 4; ++i) mean += y[i] / 4;
  for (int i = 0; i < 4; ++i) var += (y[i] - mean) * (y[i] - mean) / 4;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.25 / (1.25 + 1e-5)));
}

TEST_CASE("batch norm in eval mode applies the running statistics") {
  BatchNorm2d<D> bn("bn", 1);
  std::vector<Param<D>*> buffers;
  bn.collect_buffers(buffers);
  buffers[0]->value[0] = 2.0;
  buffers[1]->value[0] = 4.0;
  BasicTensor<D> x(1, 1, 1, 1, 6.0);
  CHECK(bn.forward(x, Mode::inference)[0] == doctest::Approx(4.0 / std::sqrt(4.0 + 1e-5)));
  check_gradients(bn, test::random_tensor<D>({1, 1, 3, 3}, 4), Mode::eval);
}

TEST_CASE("pointwise activations: values and gradients") {
  BasicTensor<D> x(1, 1, 1, 3);
  x[0] = -2.0;
  x[1] = 0.5;
  x[2] = 3.0;
  Pointwise<D> relu("r", Activation::relu), leaky("l", Activation::leaky_relu, 0.2),
      th("t", Activation::tanh), sg("s", Activation::sigmoid);
  CHECK(relu.forward(x, Mode::inference)[0] == 0.0);
  CHECK(leaky.forward(x, Mode::inference)[0] == doctest::Approx(-0.4));
  CHECK(th.forward(x, Mode::inference)[2] == doctest::Approx(std::tanh(3.0)));
  CHECK(sg.forward(x, Mode::inference)[1] == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));
  const auto smooth = test::random_tensor<D>({1, 2, 3, 3}, 8);
  for (Layer<D>* l : std::initializer_list<Layer<D>*>{&relu, &leaky, &th, &sg}) {
    CAPTURE(l->name());
    check_gradients(*l, smooth, Mode::eval);
  }
}

TEST_CASE("max pooling selects the maximum and routes gradients to it") {
  MaxPool2d<D> pool("p");
  const auto x = test::random_tensor<D>({1, 2, 6, 4}, 12);
  const auto y = pool.forward(x, Mode::eval);
  REQUIRE(y.h() == 3);
  REQUIRE(y.w() == 2);
  CHECK(y.at(0, 1, 2, 1) == std::max({x.at(0, 1, 4, 2), x.at(0, 1, 4, 3), x.at(0, 1, 5, 2), x.at(0, 1, 5, 3)}));
  check_gradients(pool, x, Mode::eval);
}

TEST_CASE("residual block gradients include the skip path") {
  Residual<D> res("res");
  res.body().emplace<Conv2d<D>>("res.conv_a", 2, 2, 3, 1, 1, Padding::reflect, true);
  res.body().emplace<Pointwise<D>>("res.relu", Activation::tanh);
  res.body().emplace<Conv2d<D>>("res.conv_b", 2, 2, 3, 1, 1, Padding::reflect, true);
  randomize(res, 21);
  check_gradients(res, test::random_tensor<D>({1, 2, 5, 5}, 6), Mode::eval);
}

TEST_CASE("frozen layers leave parameter gradients untouched but still pass input gradients") {
  Conv2d<D> conv("c", 1, 1, 3, 1, 1, Padding::zero, true);
  randomize(conv, 3);
  zero_grad(conv);
  conv.set_frozen(true);
  const auto x = test::random_tensor<D>({1, 1, 4, 4}, 1);
  const auto y = conv.forward(x, Mode::eval);
  const auto gx = conv.backward(test::random_tensor<D>(y.shape(), 2), true);
  double norm = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) norm += gx[i] * gx[i];
  CHECK(norm > 0.0);
  for (Param<D>* p : parameters_of(conv)) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) CHECK(p->grad[i] == 0.0);
  }
}

TEST_CASE("normal initialization: weights ~ N(0, sd), biases 0, norm scale 1") {
  Sequential<float> net("n");
  net.emplace<Conv2d<float>>("a.conv", 64, 64, 3, 1, 1, Padding::zero, true);
  net.emplace<BatchNorm2d<float>>("a.bn", 64);
  Rng rng(4);
  initialize_normal(net, rng, 0.02);
  const auto params = parameters_of(net);
  double sum = 0.0, sq = 0.0;
  const auto& w = params[0]->value;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += w[i];
    sq += static_cast<double>(w[i]) * w[i];
  }
  const double n = static_cast<double>(w.size());
  CHECK(std::sqrt(sq / n - (sum / n) * (sum / n)) == doctest::Approx(0.02).epsilon(0.03));
  CHECK(params[1]->value[0] == 0.0f);  // conv bias
  CHECK(params[2]->value[5] == 1.0f);  // bn scale
  CHECK(params[3]->value[5] == 0.0f);  // bn offset
}

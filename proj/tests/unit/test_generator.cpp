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

#include <set>

#include "support.hpp"
#include "texpand/generator.hpp"
#include "texpand/receptive_field.hpp"

using namespace texpand;

namespace {

// Input positions reachable from one output position, by explicit set
// enumeration through each conv (pad = kernel / 2).
int enumerated_receptive_field(const std::vector<LayerGeometry>& chain) {
  std::set<long> positions{0};
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    std::set<long> next;
    for (long p : positions)
      for (int t = 0; t < it->kernel; ++t) next.insert(p * it->stride - it->kernel / 2 + t);
    positions = std::move(next);
  }
  return static_cast<int>(*positions.rbegin() - *positions.begin() + 1);
}

// Rows and columns of the input that influence one output pixel, found by
// back-propagating a unit gradient through the network in double precision.
std::pair<Span, Span> gradient_support(Generator<double>& g, int size, int oy, int ox) {
  const auto x = test::random_tensor<double>({1, 3, size, size}, 3);
  const auto y = g.forward(x, Mode::eval);
  BasicTensor<double> dy(y.shape());
  dy.at(0, 1, oy, ox) = 1.0;
  const auto dx = g.backward(dy, true);
  Span rows{size, -1}, cols{size, -1};
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < size; ++r) {
      for (int q = 0; q < size; ++q) {
        if (dx.at(0, c, r, q) == 0.0) continue;
        rows = {std::min<long>(rows.lo, r), std::max<long>(rows.hi, r)};
        cols = {std::min<long>(cols.lo, q), std::max<long>(cols.hi, q)};
      }
    }
  }
  return {rows, cols};
}

}  // namespace

TEST_CASE("the default trunk has a 109-pixel receptive field") {
  const GeneratorSpec spec = GeneratorSpec::standard();
  CHECK(receptive_field(spec) == 109);
  CHECK(enumerated_receptive_field(generator_trunk(spec)) == 109);
}

TEST_CASE("receptive field: 13 with no residual blocks, +16 per block") {
  for (int r = 0; r <= 9; ++r) {
    const GeneratorSpec spec = GeneratorSpec::standard(8, r);
    CAPTURE(r);
    CHECK(receptive_field(spec) == 13 + 16 * r);
    CHECK(enumerated_receptive_field(generator_trunk(spec)) == receptive_field(spec));
  }
  CHECK(receptive_field(std::vector<LayerGeometry>{}) == 1);
  CHECK(receptive_field({{3, 2}, {3, 2}, {3, 1}}) == 15);
}

TEST_CASE("full-network support grows with the residual count and contains the trunk field") {
  int previous = 0;
  for (int r = 0; r <= 6; ++r) {
    const GeneratorSpec spec = GeneratorSpec::standard(8, r);
    const int full = full_receptive_field(spec);
    CHECK(full > previous);
    CHECK(full >= receptive_field(spec));
    previous = full;
  }
}

TEST_CASE("output doubles the input and is in (-1, 1)") {
  Rng rng(1);
  const GeneratorSpec spec = GeneratorSpec::standard(4, 1);
  const NetworkWeights w = build_generator(spec, rng);
  for (auto [h, wd] : {std::pair{16, 16}, {32, 48}, {64, 20}}) {
    const ImagePlane out = generator_forward(w, spec, test::random_image(3, h, wd, 2));
    CHECK(out.height() == 2 * h);
    CHECK(out.width() == 2 * wd);
    CHECK(out.channels() == 3);
    for (float v : out.values()) {
      CHECK(v > -1.0f);
      CHECK(v < 1.0f);
    }
  }
}

TEST_CASE("inputs must be divisible by the down-sampling factor and not too small") {
  Rng rng(1);
  const GeneratorSpec spec = GeneratorSpec::standard(4, 1);
  const NetworkWeights w = build_generator(spec, rng);
  CHECK_THROWS_WITH_AS(generator_forward(w, spec, test::random_image(3, 18, 16, 1)),
                       doctest::Contains("divisible by 4"), Error);
  CHECK_THROWS_AS(generator_forward(w, spec, test::random_image(3, 12, 12, 1)), Error);
  CHECK_THROWS_AS(generator_forward(w, spec, test::random_image(1, 16, 16, 1)), Error);
}

TEST_CASE("initialization and inference are deterministic") {
  const GeneratorSpec spec = GeneratorSpec::standard(4, 2);
  Rng a(9), b(9), c(10);
  const NetworkWeights wa = build_generator(spec, a);
  const NetworkWeights wb = build_generator(spec, b);
  const NetworkWeights wc = build_generator(spec, c);
  CHECK(weights_hash(wa) == weights_hash(wb));
  CHECK(weights_hash(wa) != weights_hash(wc));
  const ImagePlane img = test::random_image(3, 32, 32, 4);
  CHECK(generator_forward(wa, spec, img) == generator_forward(wb, spec, img));
}

TEST_CASE("spec canonical form round-trips and is stored in the archive") {
  const GeneratorSpec spec = GeneratorSpec::standard(16, 3);
  CHECK(spec.canonical() ==
        "enc=7/1/16,3/2/32,3/2/64;res=3;widen=3/1/128;up=3/2/64,3/2/32,3/2/16;out=7/1/3;bn=1;pad=reflect;act=tanh");
  CHECK(GeneratorSpec::parse(spec.canonical()) == spec);
  Rng rng(1);
  CHECK(generator_spec_of(build_generator(spec, rng)) == spec);
  CHECK(spec.downsample_factor() == 4);
  CHECK(spec.resblock_channels() == 64);
}

TEST_CASE("inconsistent specs are rejected") {
  GeneratorSpec s = GeneratorSpec::standard(8, 1);
  s.upsample.pop_back();
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("three"), Error);
  s = GeneratorSpec::standard(8, 1);
  s.output.channels = 4;
  CHECK_THROWS_AS(s.validate(), Error);
  s = GeneratorSpec::standard(8, 1);
  s.encoder[0].kernel = 4;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK_THROWS_AS(GeneratorSpec::parse("enc=7/1/8;bogus=1"), Error);
  CHECK_THROWS_AS(generator_spec_of(NetworkWeights{}), Error);
}

TEST_CASE("input gradients of one output pixel stay inside the computed support") {
  const GeneratorSpec spec = GeneratorSpec::standard(4, 1);
  Generator<double> g(spec);
  Rng rng(5);
  g.initialize(rng);
  const int size = 64;
  for (int o : {63, 64, 65, 66}) {
    const Span s = generator_support(spec, o);
    REQUIRE(s.lo > 1);
    REQUIRE(s.hi < size - 2);
    const auto [rows, cols] = gradient_support(g, size, o, 64);
    CAPTURE(o);
    CHECK(rows.lo >= s.lo);
    CHECK(rows.hi <= s.hi);
    // The interval is tight: the extreme taps are reached.
    CHECK(rows.lo <= s.lo + 1);
    CHECK(rows.hi >= s.hi - 1);
    const Span sc = generator_support(spec, 64);
    CHECK(cols.lo >= sc.lo);
    CHECK(cols.hi <= sc.hi);
  }
}

TEST_CASE("feature stages have the expected shapes and names") {
  const GeneratorSpec spec = GeneratorSpec::standard(4, 2);
  Rng rng(2);
  const NetworkWeights w = build_generator(spec, rng);
  const auto names = feature_layer_names(spec);
  CHECK(names == std::vector<std::string>{"relu", "resblock_1", "resblock_2", "conv"});
  Generator<float> g(spec);
  g.load(w);
  const Tensor x = test::random_image(3, 32, 32, 1).tensor();
  CHECK(g.features(x, "relu").shape() == Shape4{1, 16, 8, 8});
  CHECK(g.features(x, "resblock_2").shape() == Shape4{1, 16, 8, 8});
  CHECK(g.features(x, "conv").shape() == Shape4{1, 32, 8, 8});
  CHECK_THROWS_AS(g.features(x, "upsample_1"), Error);
  const ImagePlane img = test::random_image(3, 32, 32, 1);
  CHECK(feature_map_difference(w, spec, img, "resblock_1", "resblock_1") == 0.0);
  CHECK(feature_map_difference(w, spec, img, "resblock_1", "relu") > 0.0);
  const ImagePlane vis = visualize_features(w, spec, img, "relu", 3);
  CHECK(vis.height() == 8);
  CHECK_THROWS_AS(visualize_features(w, spec, img, "relu", 16), Error);
}

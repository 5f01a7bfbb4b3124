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

#include <png.h>

#include <fstream>

#include "support.hpp"
#include "texpand/image.hpp"

using namespace texpand;
namespace fs = std::filesystem;

namespace {

void write_png(const fs::path& path, int w, int h, png_uint_32 format, const std::vector<png_byte>& pixels) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  REQUIRE(png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr));
}

// Textbook 2-D gradient noise written as a sum of four corner contributions,
// each weighted by a separable quintic falloff.
double oracle_noise(const std::array<int, 512>& P, double x, double y) {
  static const double g[8][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  auto falloff = [](double t) {
    t = std::abs(t);
    return 1.0 - (6 * std::pow(t, 5) - 15 * std::pow(t, 4) + 10 * std::pow(t, 3));
  };
  const int i0 = static_cast<int>(std::floor(x));
  const int j0 = static_cast<int>(std::floor(y));
  double sum = 0.0;
  for (int di = 0; di <= 1; ++di) {
    for (int dj = 0; dj <= 1; ++dj) {
      const int i = i0 + di;
      const int j = j0 + dj;
      const int h = P[P[i & 255] + (j & 255)] & 7;
      const double dx = x - i;
      const double dy = y - j;
      sum += falloff(dx) * falloff(dy) * (g[h][0] * dx + g[h][1] * dy);
    }
  }
  return sum;
}

}  // namespace

TEST_CASE("8-bit mapping: endpoints are exact and round trips stay within one quantization step") {
  CHECK(from_u8(0) == -1.0f);
  CHECK(from_u8(255) == 1.0f);
  for (int v = 0; v < 256; ++v) CHECK(to_u8(from_u8(static_cast<std::uint8_t>(v))) == v);
  for (float x = -1.0f; x <= 1.0f; x += 0.001f) CHECK(std::abs(from_u8(to_u8(x)) - x) <= kQuantizationStep);
}

TEST_CASE("save then load a random image stays within the quantization bound") {
  const auto dir = test::scratch_dir("image_roundtrip");
  const ImagePlane img = test::random_image(3, 64, 48, 3);
  save_image(img, dir / "a.png");
  const ImagePlane back = load_image(dir / "a.png");
  REQUIRE(back.height() == 64);
  REQUIRE(back.width() == 48);
  REQUIRE(back.channels() == 3);
  CHECK(test::max_rel_diff(back.tensor(), img.tensor()) <= kQuantizationStep);
}

TEST_CASE("black and white PNGs map to the range endpoints; width and height are not swapped") {
  const auto dir = test::scratch_dir("image_endpoints");
  write_png(dir / "black.png", 6, 4, PNG_FORMAT_RGB, std::vector<png_byte>(6 * 4 * 3, 0));
  write_png(dir / "white.png", 1, 1, PNG_FORMAT_RGB, std::vector<png_byte>(3, 255));
  const ImagePlane black = load_image(dir / "black.png");
  CHECK(black.height() == 4);
  CHECK(black.width() == 6);
  for (float v : black.values()) CHECK(v == -1.0f);
  const ImagePlane white = load_image(dir / "white.png");
  CHECK(white.values().size() == 3);
  for (float v : white.values()) CHECK(v == 1.0f);
}

TEST_CASE("grayscale is rejected unless replication is requested") {
  const auto dir = test::scratch_dir("image_gray");
  write_png(dir / "g.png", 3, 2, PNG_FORMAT_GRAY, {0, 255, 0, 255, 0, 255});
  CHECK_THROWS_WITH_AS(load_image(dir / "g.png"), doctest::Contains("channel"), Error);
  const ImagePlane rgb = load_image(dir / "g.png", GrayPolicy::replicate);
  CHECK(rgb.channels() == 3);
  CHECK(rgb.at(2, 0, 1) == 1.0f);
  CHECK(rgb.at(0, 1, 1) == -1.0f);
}

TEST_CASE("alpha is dropped") {
  const auto dir = test::scratch_dir("image_alpha");
  write_png(dir / "a.png", 1, 1, PNG_FORMAT_RGBA, {255, 0, 255, 10});
  const ImagePlane img = load_image(dir / "a.png");
  CHECK(img.channels() == 3);
  CHECK(img.at(1, 0, 0) == -1.0f);
}

TEST_CASE("load errors name the problem") {
  const auto dir = test::scratch_dir("image_errors");
  CHECK_THROWS_AS(load_image(dir / "missing.png"), Error);
  std::ofstream(dir / "junk.png") << "not a png at all";
  CHECK_THROWS_AS(load_image(dir / "junk.png"), Error);
  write_png(dir / "deep.png", 2, 2, PNG_FORMAT_RGB | PNG_FORMAT_FLAG_LINEAR,
            std::vector<png_byte>(2 * 2 * 3 * 2, 0));
  CHECK_THROWS_WITH_AS(load_image(dir / "deep.png"), doctest::Contains("16-bit"), Error);
}

TEST_CASE("save rejects out-of-range values, wrong channel counts and unwritable paths") {
  const auto dir = test::scratch_dir("image_save");
  ImagePlane img(3, 2, 2);
  img.at(1, 1, 1) = 1.5f;
  try {
    save_image(img, dir / "x.png");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "range");
  }
  img.at(1, 1, 1) = 1.00005f;  // within tolerance
  CHECK_NOTHROW(save_image(img, dir / "ok.png"));
  CHECK_THROWS_AS(save_image(ImagePlane(4, 2, 2), dir / "y.png"), Error);
  CHECK_THROWS_AS(save_image(ImagePlane(3, 2, 2), dir / "no" / "such" / "dir" / "z.png"), Error);
  CHECK(clamp_image(img).at(1, 1, 1) == 1.0f);
}

TEST_CASE("perlin noise is deterministic, bounded and seed-dependent") {
  const NoiseField a = perlin(96, 128, 5);
  const NoiseField b = perlin(96, 128, 5);
  const NoiseField c = perlin(96, 128, 6);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  const NoiseField big = perlin(512, 512, 1);
  const auto [lo, hi] = std::minmax_element(big.values.begin(), big.values.end());
  CHECK(*lo >= -1.0f);
  CHECK(*hi <= 1.0f);
  CHECK(*hi - *lo > 0.5f);  // not degenerate
  CHECK_THROWS_AS(perlin(0, 4, 1), Error);
  CHECK_THROWS_AS(perlin(4, 4, 1, 0), Error);
}

TEST_CASE("single-octave perlin matches a direct gradient-noise oracle and vanishes on the lattice") {
  const int h = 64, w = 80;
  const NoiseField f = perlin(h, w, 11, 1, 0.5, 8.0);
  const auto P = perlin_permutation(11);
  double worst = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double expect = std::clamp(oracle_noise(P, x / 8.0, y / 8.0), -1.0, 1.0);
      worst = std::max(worst, std::abs(expect - f.at(y, x)));
    }
  }
  CHECK(worst < 1e-6);
  // Default period: four lattice cells across the longer side.
  const NoiseField d = perlin(128, 128, 3, 1);
  for (int y = 0; y < 128; y += 32) {
    for (int x = 0; x < 128; x += 32) CHECK(d.at(y, x) == 0.0f);
  }
}

TEST_CASE("perlin permutation is a bijection repeated twice") {
  const auto P = perlin_permutation(99);
  std::vector<int> seen(256, 0);
  for (int i = 0; i < 256; ++i) seen[P[i]]++;
  CHECK(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));
  for (int i = 0; i < 256; ++i) CHECK(P[i] == P[i + 256]);
}

TEST_CASE("add_noise: zero amplitude is the identity, large amplitude stays in range") {
  const ImagePlane img = test::random_image(3, 32, 32, 1);
  const NoiseField n = perlin(32, 32, 2);
  CHECK(add_noise(img, n, 0.0f) == img);
  ImagePlane white(3, 32, 32);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) white.at(c, y, x) = 1.0f;
  const ImagePlane loud = add_noise(white, n, 2.0f);
  for (float v : loud.values()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
  CHECK(add_noise(img, perlin(32, 32, 3), 0.2f) != add_noise(img, perlin(32, 32, 4), 0.2f));
  CHECK_THROWS_AS(add_noise(img, perlin(16, 32, 2), 0.1f), Error);
}

TEST_CASE("fingerprint and finiteness checks") {
  const ImagePlane a = test::random_image(3, 8, 8, 1);
  ImagePlane b = a;
  CHECK(fingerprint(a) == fingerprint(b));
  b.at(0, 0, 0) += 1e-3f;
  CHECK(fingerprint(a) != fingerprint(b));
  CHECK(all_finite(a));
  b.at(2, 7, 7) = std::numeric_limits<float>::infinity();
  CHECK_FALSE(all_finite(b));
}

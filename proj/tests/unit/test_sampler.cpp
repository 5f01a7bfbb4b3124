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
#include "texpand/sampler.hpp"

using namespace texpand;

namespace {

bool window_equals(const ImagePlane& big, Offset at, const ImagePlane& small) {
  for (int c = 0; c < small.channels(); ++c)
    for (int y = 0; y < small.height(); ++y)
      for (int x = 0; x < small.width(); ++x)
        if (big.at(c, at[0] + y, at[1] + x) != small.at(c, y, x)) return false;
  return true;
}

}  // namespace

TEST_CASE("block pairs have the right sizes and nest exactly") {
  const ImagePlane ex = test::random_image(3, 400, 600, 1);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const BlockPair p = sample_block_pair(ex, 128, rng);
    REQUIRE(p.source.height() == 128);
    REQUIRE(p.source.width() == 128);
    REQUIRE(p.target.height() == 256);
    REQUIRE(p.target.width() == 256);
    CHECK(p.source_offset[0] >= 0);
    CHECK(p.source_offset[0] <= 128);
    CHECK(p.source_offset[1] >= 0);
    CHECK(p.source_offset[1] <= 128);
    CHECK(window_equals(p.target, p.source_offset, p.source));
    CHECK(window_equals(ex, p.target_offset, p.target));
  }
}

TEST_CASE("a 2k x 2k exemplar forces the target to the origin; anything smaller is rejected") {
  const ImagePlane ex = test::random_image(3, 256, 256, 2);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) CHECK(sample_block_pair(ex, 128, rng).target_offset == Offset{0, 0});
  CHECK_THROWS_WITH_AS(sample_block_pair(test::random_image(3, 255, 256, 2), 128, rng),
                       doctest::Contains("256x256"), Error);
}

TEST_CASE("target offsets cover every decile over 10,000 draws") {
  const ImagePlane ex = test::random_image(3, 400, 600, 4);
  Rng rng(7);
  const int max_row = 400 - 256;
  const int max_col = 600 - 256;
  std::vector<int> rows(10, 0), cols(10, 0);
  std::set<int> distinct_rows;
  for (int i = 0; i < 10000; ++i) {
    const BlockPair p = sample_block_pair(ex, 128, rng);
    rows[std::min(9, p.target_offset[0] * 10 / (max_row + 1))]++;
    cols[std::min(9, p.target_offset[1] * 10 / (max_col + 1))]++;
    distinct_rows.insert(p.target_offset[0]);
  }
  for (int d = 0; d < 10; ++d) {
    CHECK(rows[d] > 0);
    CHECK(cols[d] > 0);
  }
  CHECK(static_cast<int>(distinct_rows.size()) == max_row + 1);  // both ends reachable
}

TEST_CASE("sampling is reproducible from the seed") {
  const ImagePlane ex = test::random_image(3, 128, 160, 5);
  Rng a(11), b(11);
  for (int i = 0; i < 10; ++i) {
    const BlockPair pa = sample_block_pair(ex, 32, a, true);
    const BlockPair pb = sample_block_pair(ex, 32, b, true);
    CHECK(pa.target == pb.target);
    CHECK(pa.source_offset == pb.source_offset);
  }
}

TEST_CASE("augmented pairs still nest exactly and are an orientation of the exemplar window") {
  const ImagePlane ex = test::random_image(3, 96, 96, 6);
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const BlockPair p = sample_block_pair(ex, 16, rng, true);
    CHECK(window_equals(p.target, p.source_offset, p.source));
    const ImagePlane window = crop(ex, p.target_offset, {32, 32});
    std::multiset<float> a(window.values().begin(), window.values().end());
    std::multiset<float> b(p.target.values().begin(), p.target.values().end());
    CHECK(a == b);
  }
}

TEST_CASE("crop: identity at full size, exact windows, bounds enforced") {
  const ImagePlane img = test::random_image(3, 20, 30, 8);
  CHECK(crop(img, {0, 0}, {20, 30}) == img);
  const ImagePlane w = crop(img, {3, 5}, {4, 6});
  CHECK(w.at(2, 3, 5) == img.at(2, 6, 10));
  CHECK_THROWS_AS(crop(img, {-1, 0}, {4, 4}), Error);
  CHECK_THROWS_AS(crop(img, {17, 0}, {4, 4}), Error);
  CHECK_THROWS_AS(crop(img, {0, 0}, {0, 4}), Error);
}

TEST_CASE("tile shuffling permutes tiles, preserves their contents and inverts exactly") {
  const ImagePlane img = test::random_image(3, 512, 512, 9);
  Rng rng(5);
  const auto [shuffled, grid] = shuffle_tiles(img, 4, 4, rng);
  CHECK(grid.tile_h == 128);
  CHECK(grid.tile_w == 128);
  std::vector<int> sorted = grid.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 16; ++i) CHECK(sorted[i] == i);
  // Tile i of the output is tile permutation[i] of the input.
  for (int i = 0; i < 16; ++i) {
    const int s = grid.permutation[i];
    const ImagePlane a = crop(shuffled, {(i / 4) * 128, (i % 4) * 128}, {128, 128});
    const ImagePlane b = crop(img, {(s / 4) * 128, (s % 4) * 128}, {128, 128});
    CHECK(a == b);
  }
  CHECK(apply_tiles(shuffled, inverse(grid)) == img);
  TileGrid identity = grid;
  std::iota(identity.permutation.begin(), identity.permutation.end(), 0);
  CHECK(apply_tiles(img, identity) == img);
}

TEST_CASE("tile shuffling rejects indivisible sizes and non-bijective grids") {
  Rng rng(1);
  CHECK_THROWS_AS(shuffle_tiles(test::random_image(3, 510, 512, 1), 4, 4, rng), Error);
  const ImagePlane img = test::random_image(3, 8, 8, 1);
  TileGrid bad{2, 2, 4, 4, {0, 0, 1, 2}};
  CHECK_THROWS_AS(apply_tiles(img, bad), Error);
}

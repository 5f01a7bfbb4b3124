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

#include "texpand/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace texpand {
namespace {

std::string dims(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

// flip_v, flip_h, transpose applied in that order to a square image.
ImagePlane orient(const ImagePlane& img, bool flip_v, bool flip_h, bool transpose) {
  const int n = img.height();
  ImagePlane out(img.channels(), n, n);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int sy = transpose ? x : y;
        int sx = transpose ? y : x;
        if (flip_v) sy = n - 1 - sy;
        if (flip_h) sx = n - 1 - sx;
        out.at(c, y, x) = img.at(c, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace

ImagePlane crop(const ImagePlane& img, Offset offset, Extent size) {
  const auto [r0, c0] = offset;
  const auto [h, w] = size;
  if (r0 < 0 || c0 < 0 || h < 1 || w < 1 || r0 + h > img.height() || c0 + w > img.width()) {
    fail("precondition", "crop window at (" + std::to_string(r0) + "," + std::to_string(c0) +
                             ") of size " + dims(h, w) + " lies outside the " +
                             dims(img.height(), img.width()) + " image");
  }
  ImagePlane out(img.channels(), h, w);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const float* src = img.row(c, r0 + y) + c0;
      std::copy(src, src + w, out.row(c, y));
    }
  }
  return out;
}

BlockPair sample_block_pair(const ImagePlane& exemplar, int k, Rng& rng, bool augment) {
  if (k < 1) fail("precondition", "block size k must be positive");
  const int t = 2 * k;
  if (exemplar.height() < t || exemplar.width() < t) {
    fail("precondition", "exemplar " + dims(exemplar.height(), exemplar.width()) +
                             " is too small for k=" + std::to_string(k) + "; need at least " +
                             dims(t, t));
  }
  BlockPair pair;
  pair.k = k;
  pair.target_offset = {static_cast<int>(uniform_int(rng, 0, exemplar.height() - t)),
                        static_cast<int>(uniform_int(rng, 0, exemplar.width() - t))};
  pair.target = crop(exemplar, pair.target_offset, {t, t});
  if (augment) {
    const bool flip_v = uniform_int(rng, 0, 1) == 1;
    const bool flip_h = uniform_int(rng, 0, 1) == 1;
    const bool transpose = uniform_int(rng, 0, 1) == 1;
    pair.target = orient(pair.target, flip_v, flip_h, transpose);
  }
  pair.source_offset = {static_cast<int>(uniform_int(rng, 0, k)),
                        static_cast<int>(uniform_int(rng, 0, k))};
  pair.source = crop(pair.target, pair.source_offset, {k, k});
  return pair;
}

ImagePlane apply_tiles(const ImagePlane& img, const TileGrid& grid) {
  const int count = grid.rows * grid.cols;
  if (grid.rows * grid.tile_h != img.height() || grid.cols * grid.tile_w != img.width() ||
      static_cast<int>(grid.permutation.size()) != count) {
    fail("precondition", "tile grid does not match the " + dims(img.height(), img.width()) + " image");
  }
  std::vector<bool> seen(static_cast<std::size_t>(count), false);
  for (int p : grid.permutation) {
    if (p < 0 || p >= count || seen[p]) fail("precondition", "tile permutation is not a bijection");
    seen[p] = true;
  }
  ImagePlane out(img.channels(), img.height(), img.width());
  for (int i = 0; i < count; ++i) {
    const int src = grid.permutation[i];
    const int dy = (i / grid.cols) * grid.tile_h;
    const int dx = (i % grid.cols) * grid.tile_w;
    const int sy = (src / grid.cols) * grid.tile_h;
    const int sx = (src % grid.cols) * grid.tile_w;
    for (int c = 0; c < img.channels(); ++c) {
      for (int y = 0; y < grid.tile_h; ++y) {
        const float* from = img.row(c, sy + y) + sx;
        std::copy(from, from + grid.tile_w, out.row(c, dy + y) + dx);
      }
    }
  }
  return out;
}

std::pair<ImagePlane, TileGrid> shuffle_tiles(const ImagePlane& img, int rows, int cols, Rng& rng) {
  if (rows < 1 || cols < 1) fail("precondition", "tile grid needs at least one row and column");
  if (img.height() % rows != 0 || img.width() % cols != 0) {
    fail("precondition", "image " + dims(img.height(), img.width()) +
                             " is not divisible into a " + dims(rows, cols) + " tile grid");
  }
  TileGrid grid{rows, cols, img.height() / rows, img.width() / cols, {}};
  grid.permutation.resize(static_cast<std::size_t>(rows) * cols);
  std::iota(grid.permutation.begin(), grid.permutation.end(), 0);
  for (int i = static_cast<int>(grid.permutation.size()) - 1; i > 0; --i) {
    std::swap(grid.permutation[i], grid.permutation[uniform_int(rng, 0, i)]);
  }
  ImagePlane out = apply_tiles(img, grid);
  return {std::move(out), std::move(grid)};
}

TileGrid inverse(const TileGrid& grid) {
  TileGrid inv = grid;
  for (std::size_t i = 0; i < grid.permutation.size(); ++i) {
    inv.permutation[grid.permutation[i]] = static_cast<int>(i);
  }
  return inv;
}

}  // namespace texpand

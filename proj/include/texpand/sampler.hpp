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

#include <array>
#include <utility>
#include <vector>

#include "texpand/image.hpp"
#include "texpand/random.hpp"

namespace texpand {

using Offset = std::array<int, 2>;  // (row, col)
using Extent = std::array<int, 2>;  // (height, width)

// One self-supervised training sample: a k x k source block S and the
// 2k x 2k target block T that contains it.
struct BlockPair {
  ImagePlane source;
  ImagePlane target;
  Offset source_offset{};  // S inside T
  Offset target_offset{};  // T inside the exemplar
  int k = 0;
};

// Output tile i (row-major) holds input tile permutation[i].
struct TileGrid {
  int rows = 0;
  int cols = 0;
  int tile_h = 0;
  int tile_w = 0;
  std::vector<int> permutation;
};

ImagePlane crop(const ImagePlane& img, Offset offset, Extent size);

// T is placed uniformly over all valid integer offsets in the exemplar, S
// uniformly over the (k + 1)^2 offsets inside T. With `augment`, T is first
// passed through a random flip/rotation (off by default: it breaks oriented
// structure).
BlockPair sample_block_pair(const ImagePlane& exemplar, int k, Rng& rng, bool augment = false);

std::pair<ImagePlane, TileGrid> shuffle_tiles(const ImagePlane& img, int rows, int cols, Rng& rng);
// Rearranges `img` according to an explicit grid.
ImagePlane apply_tiles(const ImagePlane& img, const TileGrid& grid);
TileGrid inverse(const TileGrid& grid);

}  // namespace texpand

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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "texpand/generator.hpp"
#include "texpand/image.hpp"
#include "texpand/sampler.hpp"

namespace texpand {

// A trained generator ready for inference, loaded from either a generator
// archive or a training checkpoint. Loading never modifies the file.
struct TrainedGenerator {
  GeneratorSpec spec;
  NetworkWeights weights;
};

TrainedGenerator load_generator(const std::filesystem::path& path);
TrainedGenerator generator_from_archive(const NetworkWeights& archive);

// Default cap on the size of any intermediate result.
inline constexpr std::int64_t kDefaultPixelBudget = 64LL * 1000 * 1000;

// One pass through the generator: h x w -> 2h x 2w.
ImagePlane expand(const TrainedGenerator& g, const ImagePlane& img);

enum class CropPolicy { none, recrop_to_original };

struct ExpansionJob {
  int cycles = 1;
  CropPolicy policy = CropPolicy::none;
  std::uint64_t seed = 0;
  std::int64_t pixel_budget = kDefaultPixelBudget;
};

// Repeated expansion: each cycle expands the previous result (after a random
// crop back to the input size under recrop_to_original). Fails before running
// a cycle whose output would exceed the pixel budget.
ImagePlane expand_repeated(const TrainedGenerator& g, const ImagePlane& img, const ExpansionJob& job);

struct StressCycle {
  ImagePlane expanded;  // 2h x 2w
  Offset crop_offset;   // where the next input was cut from `expanded`
  ImagePlane cropped;   // h x w, the next cycle's input
};

// Expand, crop a random exemplar-sized window from the result, repeat.
std::vector<StressCycle> stress_test(const TrainedGenerator& g, const ImagePlane& exemplar, int cycles,
                                     Rng& rng);

// Feeds a guide image (e.g. noise or a sketch) to the generator.
ImagePlane transfer(const TrainedGenerator& g, const ImagePlane& guide);

enum class DiversifyMode { crop, shuffle, noise };

struct DiversifyParams {
  DiversifyMode mode = DiversifyMode::crop;
  int crop_height = 256;  // crop
  int crop_width = 256;
  int grid_rows = 4;  // shuffle
  int grid_cols = 4;
  double noise_amplitude = 0.1;  // noise
  int noise_octaves = 4;
};

struct Diversified {
  ImagePlane input;   // what was fed to the generator
  ImagePlane output;
};

Diversified diversify(const TrainedGenerator& g, const ImagePlane& exemplar, const DiversifyParams& params,
                      Rng& rng);

DiversifyMode parse_diversify_mode(const std::string& s);

}  // namespace texpand

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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "texpand/tensor.hpp"

namespace texpand {

// A C x H x W floating-point image. RGB images live in the canonical range
// [-1, 1]; feature-map visualizations may carry any channel count.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int channels, int height, int width, float fill = 0.0f)
      : pixels_(1, channels, height, width, fill) {}
  // Takes sample `n` of a batch tensor.
  static ImagePlane from_tensor(const Tensor& t, int n = 0);

  int channels() const { return pixels_.c(); }
  int height() const { return pixels_.h(); }
  int width() const { return pixels_.w(); }
  bool empty() const { return pixels_.empty(); }
  std::size_t size() const { return pixels_.size(); }

  float& at(int c, int y, int x) { return pixels_.at(0, c, y, x); }
  float at(int c, int y, int x) const { return pixels_.at(0, c, y, x); }
  float* data() { return pixels_.data(); }
  float* row(int c, int y) { return &pixels_.at(0, c, y, 0); }
  const float* row(int c, int y) const {
    return pixels_.data() + (static_cast<std::size_t>(c) * height() + y) * width();
  }
  const float* data() const { return pixels_.data(); }
  std::span<const float> values() const { return pixels_.span(); }

  // 1 x C x H x W view as a batch of one.
  const Tensor& tensor() const { return pixels_; }

  bool operator==(const ImagePlane& other) const;

 private:
  Tensor pixels_;
};

enum class GrayPolicy { reject, replicate };

// Quantization step of the 8-bit <-> canonical-range mapping.
inline constexpr float kQuantizationStep = 1.0f / 127.5f;
// Values further than this outside [-1, 1] are rejected by save_image.
inline constexpr float kRangeTolerance = 1e-4f;

float from_u8(std::uint8_t v);
std::uint8_t to_u8(float v);

// 8-bit PNG -> canonical RGB plane. Alpha is dropped with a warning on stderr.
// Grayscale files are rejected unless `gray` is GrayPolicy::replicate.
ImagePlane load_image(const std::filesystem::path& path, GrayPolicy gray = GrayPolicy::reject);
// Writes an 8-bit RGB PNG. Fails on values outside [-1, 1] (beyond
// kRangeTolerance); clamp explicitly with clamp_image first if needed.
void save_image(const ImagePlane& img, const std::filesystem::path& path);

ImagePlane clamp_image(ImagePlane img);
// FNV-1a over the raw float bytes; identifies an exemplar in checkpoints.
std::uint64_t fingerprint(const ImagePlane& img);
bool all_finite(const ImagePlane& img);

struct NoiseField {
  int height = 0;
  int width = 0;
  std::uint64_t seed = 0;
  int octaves = 4;
  double persistence = 0.5;
  double period = 0.0;  // lattice spacing of the first octave, pixels
  std::vector<float> values;

  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// 256-entry permutation used to hash lattice corners, doubled to 512 entries.
std::array<int, 512> perlin_permutation(std::uint64_t seed);

// Classic 2-D gradient noise (quintic fade, 8 gradient directions
// (+-1,+-1), (+-1,0), (0,+-1)) summed over octaves with amplitude
// persistence^o and frequency 2^o, normalized by the total amplitude.
// `period` <= 0 selects max(height, width) / 4, i.e. four lattice cells across
// the longer side. Pixel (y, x) samples the noise at (x, y) / period.
NoiseField perlin(int height, int width, std::uint64_t seed, int octaves = 4,
                  double persistence = 0.5, double period = 0.0);

// img + amplitude * noise on every channel, clamped to [-1, 1].
ImagePlane add_noise(const ImagePlane& img, const NoiseField& noise, float amplitude);

// Replicates the noise into three channels (a guide image for transfer).
ImagePlane noise_image(const NoiseField& noise);

}  // namespace texpand

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

#include "texpand/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>
#include <random>

#include "texpand/hash.hpp"

namespace texpand {

ImagePlane ImagePlane::from_tensor(const Tensor& t, int n) {
  ImagePlane img(t.c(), t.h(), t.w());
  std::copy(t.sample(n), t.sample(n) + img.size(), img.data());
  return img;
}

bool ImagePlane::operator==(const ImagePlane& other) const {
  return pixels_.shape() == other.pixels_.shape() &&
         std::equal(pixels_.data(), pixels_.data() + pixels_.size(), other.pixels_.data());
}

float from_u8(std::uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; }

std::uint8_t to_u8(float v) {
  const float c = std::clamp(v, -1.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround((c + 1.0f) * 127.5f));
}

ImagePlane load_image(const std::filesystem::path& path, GrayPolicy gray) {
  if (!std::filesystem::exists(path)) {
    fail("io", "image file not found: " + path.string());
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    fail("format", "cannot decode '" + path.string() + "' as PNG: " + image.message);
  }
  const png_uint_32 file_format = image.format;
  if (file_format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    fail("format", "'" + path.string() + "' has 16-bit samples; expected 8-bit");
  }
  const bool color = (file_format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (file_format & PNG_FORMAT_FLAG_ALPHA) != 0;
  if (!color && gray == GrayPolicy::reject) {
    png_image_free(&image);
    fail("format", "'" + path.string() + "' has " + std::to_string(alpha ? 2 : 1) +
                       " channel(s); expected RGB");
  }
  if (alpha) {
    std::cerr << "warning: dropping alpha channel of " << path.string() << "\n";
  }
  // Read with alpha (when present) and drop it ourselves: the simplified API
  // would otherwise composite against a background.
  image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const int stride_px = alpha ? 4 : 3;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail("format", "failed to decode '" + path.string() + "': " + msg);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  ImagePlane out(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const png_byte* px = buffer.data() + (static_cast<std::size_t>(y) * w + x) * stride_px;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = from_u8(px[c]);
    }
  }
  return out;
}

void save_image(const ImagePlane& img, const std::filesystem::path& path) {
  if (img.channels() != 3) {
    fail("precondition", "save_image expects 3 channels, got " + std::to_string(img.channels()));
  }
  for (float v : img.values()) {
    if (!std::isfinite(v) || v < -1.0f - kRangeTolerance || v > 1.0f + kRangeTolerance) {
      fail("range", "pixel value " + std::to_string(v) +
                        " outside [-1, 1]; clamp explicitly before saving");
    }
  }
  const int h = img.height();
  const int w = img.width();
  std::vector<png_byte> buffer(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_u8(img.at(c, y, x));
      }
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    fail("io", "cannot write '" + path.string() + "': " + image.message);
  }
}

ImagePlane clamp_image(ImagePlane img) {
  float* p = img.data();
  for (std::size_t i = 0; i < img.size(); ++i) p[i] = std::clamp(p[i], -1.0f, 1.0f);
  return img;
}

std::uint64_t fingerprint(const ImagePlane& img) {
  Fnv1a h;
  const std::array<int, 3> dims{img.channels(), img.height(), img.width()};
  h.update(dims.data(), sizeof(dims));
  h.update(img.data(), img.size() * sizeof(float));
  return h.digest();
}

bool all_finite(const ImagePlane& img) {
  return std::all_of(img.values().begin(), img.values().end(),
                     [](float v) { return std::isfinite(v); });
}

std::array<int, 512> perlin_permutation(std::uint64_t seed) {
  std::array<int, 256> p{};
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the table does not depend on the
  // standard library's shuffle implementation.
  for (int i = 255; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[i], p[j]);
  }
  std::array<int, 512> out{};
  for (int i = 0; i < 512; ++i) out[i] = p[i & 255];
  return out;
}

namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double grad(int hash, double x, double y) {
  switch (hash & 7) {
    case 0: return x + y;
    case 1: return -x + y;
    case 2: return x - y;
    case 3: return -x - y;
    case 4: return x;
    case 5: return -x;
    case 6: return y;
    default: return -y;
  }
}

double lerp(double t, double a, double b) { return a + t * (b - a); }

double gradient_noise(const std::array<int, 512>& perm, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int xi = static_cast<int>(static_cast<long long>(fx) & 255);
  const int yi = static_cast<int>(static_cast<long long>(fy) & 255);
  const double xf = x - fx;
  const double yf = y - fy;
  const double u = fade(xf);
  const double v = fade(yf);
  const int aa = perm[perm[xi] + yi];
  const int ab = perm[perm[xi] + yi + 1];
  const int ba = perm[perm[xi + 1] + yi];
  const int bb = perm[perm[xi + 1] + yi + 1];
  const double x1 = lerp(u, grad(aa, xf, yf), grad(ba, xf - 1.0, yf));
  const double x2 = lerp(u, grad(ab, xf, yf - 1.0), grad(bb, xf - 1.0, yf - 1.0));
  return lerp(v, x1, x2);
}

}  // namespace

NoiseField perlin(int height, int width, std::uint64_t seed, int octaves, double persistence,
                  double period) {
  if (height < 1 || width < 1) {
    fail("precondition", "perlin noise needs positive dimensions, got " + std::to_string(height) +
                             "x" + std::to_string(width));
  }
  if (octaves < 1) fail("precondition", "perlin noise needs at least one octave");
  if (!(persistence > 0.0 && persistence <= 1.0)) {
    fail("precondition", "perlin persistence must lie in (0, 1]");
  }
  NoiseField field{height, width, seed, octaves, persistence, period, {}};
  if (field.period <= 0.0) field.period = std::max(height, width) / 4.0;
  const auto perm = perlin_permutation(seed);
  double total_amp = 0.0;
  for (int o = 0; o < octaves; ++o) total_amp += std::pow(persistence, o);

  field.values.resize(static_cast<std::size_t>(height) * width);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      double amp = 1.0;
      double freq = 1.0 / field.period;
      for (int o = 0; o < octaves; ++o) {
        sum += amp * gradient_noise(perm, x * freq, y * freq);
        amp *= persistence;
        freq *= 2.0;
      }
      field.values[static_cast<std::size_t>(y) * width + x] =
          static_cast<float>(std::clamp(sum / total_amp, -1.0, 1.0));
    }
  }
  return field;
}

ImagePlane add_noise(const ImagePlane& img, const NoiseField& noise, float amplitude) {
  if (img.height() != noise.height || img.width() != noise.width) {
    fail("shape", "noise field " + std::to_string(noise.height) + "x" +
                      std::to_string(noise.width) + " does not match image " +
                      std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  ImagePlane out = img;
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        out.at(c, y, x) = std::clamp(img.at(c, y, x) + amplitude * noise.at(y, x), -1.0f, 1.0f);
      }
    }
  }
  return out;
}

ImagePlane noise_image(const NoiseField& noise) {
  ImagePlane out(3, noise.height, noise.width);
  for (int c = 0; c < 3; ++c) {
    std::copy(noise.values.begin(), noise.values.end(), &out.at(c, 0, 0));
  }
  return out;
}

}  // namespace texpand

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

#include "texpand/synthesis.hpp"

namespace texpand {
namespace {

std::string dims(std::int64_t h, std::int64_t w) { return std::to_string(h) + "x" + std::to_string(w); }

Offset random_window(const ImagePlane& img, int h, int w, Rng& rng) {
  return {static_cast<int>(uniform_int(rng, 0, img.height() - h)),
          static_cast<int>(uniform_int(rng, 0, img.width() - w))};
}

}  // namespace

TrainedGenerator generator_from_archive(const NetworkWeights& archive) {
  const auto kind = archive.metadata.find("kind");
  if (kind == archive.metadata.end()) fail("format", "archive has no 'kind' metadata");
  TrainedGenerator g;
  g.spec = generator_spec_of(archive);
  if (kind->second == "generator") {
    g.weights = archive;
  } else if (kind->second == "checkpoint") {
    // Keep only the generator's entries, without the "G/" prefix.
    for (const auto& [name, t] : archive.entries) {
      if (name.rfind("G/", 0) == 0) g.weights.entries.emplace(name.substr(2), t);
    }
    g.weights.metadata["kind"] = "generator";
    g.weights.metadata["generator.spec"] = g.spec.canonical();
  } else {
    fail("format", "archive of kind '" + kind->second + "' holds no generator");
  }
  // Fail early on missing or misshapen entries.
  Generator<float> probe(g.spec);
  probe.load(g.weights);
  return g;
}

TrainedGenerator load_generator(const std::filesystem::path& path) {
  return generator_from_archive(load_weights(path));
}

ImagePlane expand(const TrainedGenerator& g, const ImagePlane& img) {
  return generator_forward(g.weights, g.spec, img);
}

ImagePlane expand_repeated(const TrainedGenerator& g, const ImagePlane& img, const ExpansionJob& job) {
  if (job.cycles < 1) fail("precondition", "cycles must be at least 1");
  Rng rng(job.seed);
  ImagePlane current = img;
  for (int c = 0; c < job.cycles; ++c) {
    const std::int64_t h = 2LL * current.height();
    const std::int64_t w = 2LL * current.width();
    if (h * w > job.pixel_budget) {
      fail("budget", "cycle " + std::to_string(c + 1) + " would produce " + dims(h, w) + " (" +
                         std::to_string(h * w) + " pixels), above the budget of " +
                         std::to_string(job.pixel_budget));
    }
    ImagePlane out = expand(g, current);
    if (job.policy == CropPolicy::recrop_to_original && c + 1 < job.cycles) {
      out = crop(out, random_window(out, img.height(), img.width(), rng), {img.height(), img.width()});
    }
    current = std::move(out);
  }
  return current;
}

std::vector<StressCycle> stress_test(const TrainedGenerator& g, const ImagePlane& exemplar, int cycles,
                                     Rng& rng) {
  if (cycles < 1) fail("precondition", "cycles must be at least 1");
  std::vector<StressCycle> out;
  ImagePlane current = exemplar;
  for (int c = 0; c < cycles; ++c) {
    StressCycle s;
    s.expanded = expand(g, current);
    s.crop_offset = random_window(s.expanded, exemplar.height(), exemplar.width(), rng);
    s.cropped = crop(s.expanded, s.crop_offset, {exemplar.height(), exemplar.width()});
    current = s.cropped;
    out.push_back(std::move(s));
  }
  return out;
}

ImagePlane transfer(const TrainedGenerator& g, const ImagePlane& guide) {
  if (guide.channels() == 1) {
    ImagePlane rgb(3, guide.height(), guide.width());
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < guide.height(); ++y) {
        for (int x = 0; x < guide.width(); ++x) rgb.at(c, y, x) = guide.at(0, y, x);
      }
    }
    return expand(g, rgb);
  }
  return expand(g, guide);
}

Diversified diversify(const TrainedGenerator& g, const ImagePlane& exemplar, const DiversifyParams& p,
                      Rng& rng) {
  Diversified d;
  switch (p.mode) {
    case DiversifyMode::crop:
      if (p.crop_height > exemplar.height() || p.crop_width > exemplar.width()) {
        fail("precondition", "crop " + dims(p.crop_height, p.crop_width) + " exceeds the exemplar " +
                                 dims(exemplar.height(), exemplar.width()));
      }
      d.input = crop(exemplar, random_window(exemplar, p.crop_height, p.crop_width, rng),
                     {p.crop_height, p.crop_width});
      break;
    case DiversifyMode::shuffle:
      d.input = shuffle_tiles(exemplar, p.grid_rows, p.grid_cols, rng).first;
      break;
    case DiversifyMode::noise: {
      if (p.noise_amplitude < 0.0) fail("precondition", "noise amplitude must be non-negative");
      const auto seed = static_cast<std::uint64_t>(rng());
      const NoiseField n = perlin(exemplar.height(), exemplar.width(), seed, p.noise_octaves);
      d.input = add_noise(exemplar, n, static_cast<float>(p.noise_amplitude));
      break;
    }
  }
  d.output = expand(g, d.input);
  return d;
}

DiversifyMode parse_diversify_mode(const std::string& s) {
  if (s == "crop") return DiversifyMode::crop;
  if (s == "shuffle") return DiversifyMode::shuffle;
  if (s == "noise") return DiversifyMode::noise;
  fail("config", "unknown diversify mode '" + s + "' (crop, shuffle or noise)");
}

}  // namespace texpand

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

#include "texpand/discriminator.hpp"
#include "texpand/generator.hpp"
#include "texpand/losses.hpp"

namespace texpand {

// Everything that defines a training run. Stored as a flat text document:
//
//   # comment
//   key = value
//
// Unknown keys and malformed values are errors. See README for the schema.
struct TrainingConfig {
  std::string exemplar;
  std::string output_dir = "run";

  int k = 128;
  long total_iterations = 100000;
  double lr_initial = 2e-4;
  long lr_constant_until = 50000;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 1;
  LossWeights loss;
  bool augment = false;

  int generator_base_channels = 64;
  int generator_resblocks = 6;
  int discriminator_layers = 6;
  int discriminator_base_channels = 64;
  int discriminator_channel_cap = 512;

  // Pretrained extractor archive. When empty and extractor_standin_divisor > 0
  // a random stand-in of that width divisor is built in memory instead.
  std::string extractor;
  int extractor_standin_divisor = 0;
  std::uint64_t extractor_standin_seed = 1;

  std::uint64_t seed = 0;
  long checkpoint_every = 5000;
  long log_every = 1;
  long history_length = 200;
  bool deterministic = false;

  GeneratorSpec generator_spec() const;
  DiscriminatorSpec discriminator_spec() const;

  void validate() const;
  std::string serialize() const;
  static TrainingConfig parse(const std::string& text, const std::string& source = "<config>");
  static TrainingConfig load(const std::filesystem::path& path);

  // Keys whose values differ and that matter for reproducing a run (paths,
  // logging and checkpoint cadence are excluded).
  std::vector<std::string> mismatched_fields(const TrainingConfig& other) const;
};

}  // namespace texpand

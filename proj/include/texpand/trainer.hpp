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

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "texpand/adam.hpp"
#include "texpand/config.hpp"
#include "texpand/discriminator.hpp"
#include "texpand/extractor.hpp"
#include "texpand/generator.hpp"
#include "texpand/losses.hpp"
#include "texpand/sampler.hpp"

namespace texpand {

// Learning rate after `iteration` completed steps: constant, then linear to
// zero at total_iterations.
double lr_schedule(long iteration, const TrainingConfig& config);

// Tab-separated log line: iteration, lr, adv_G, adv_D, l1, style, total_G,
// with round-trip precision.
std::string log_header();
std::string log_line(const LossReport& r, double lr);

// One step's worth of (source, target) blocks stacked along the batch axis,
// with the sampling RNG state right after they were drawn.
struct TrainingBatch {
  Tensor source;
  Tensor target;
  std::string rng_after;
};

class BlockPrefetcher;

// One adversarial training run held in memory: networks, optimizers, RNG and
// loss history. Single-threaded from the caller's point of view.
class Trainer {
 public:
  // `extractor` may be null: the style term is then reported as 0 and does
  // not contribute gradients.
  Trainer(TrainingConfig config, ImagePlane exemplar, const NetworkWeights* extractor);
  // Continues from a checkpoint written by save_checkpoint. The stored config
  // must agree with `config` on every run-defining field.
  static std::unique_ptr<Trainer> resume(const NetworkWeights& checkpoint, TrainingConfig config,
                                         ImagePlane exemplar, const NetworkWeights* extractor);
  ~Trainer();

  // One discriminator update then one generator update.
  LossReport step();

  long iteration() const { return iteration_; }
  const TrainingConfig& config() const { return config_; }
  const std::vector<LossReport>& history() const { return history_; }
  bool has_style() const { return extractor_ != nullptr; }

  Generator<float>& generator() { return generator_; }
  Discriminator<float>& discriminator() { return discriminator_; }
  NetworkWeights generator_weights() const { return generator_.save(); }
  NetworkWeights discriminator_weights() const { return discriminator_.save(); }

  // Full state: G and D (prefixed "G/" and "D/"), Adam moments, iteration,
  // RNG state, config snapshot and the recent loss history.
  NetworkWeights checkpoint() const;

 private:
  TrainingBatch next_batch();
  [[noreturn]] void abort_non_finite(const LossReport& r, const char* stage);

  TrainingConfig config_;
  ImagePlane exemplar_;
  Generator<float> generator_;
  Discriminator<float> discriminator_;
  std::unique_ptr<FeatureExtractor<float>> extractor_;
  std::string extractor_hash_;
  StyleLayerSet style_layers_;
  std::unique_ptr<Adam<float>> adam_g_;
  std::unique_ptr<Adam<float>> adam_d_;
  Rng rng_;
  std::string rng_consumed_;
  std::unique_ptr<BlockPrefetcher> prefetch_;
  long iteration_ = 0;
  std::vector<LossReport> history_;
};

void save_checkpoint(const NetworkWeights& checkpoint, const std::filesystem::path& path);
// Loads and verifies a checkpoint archive (integrity, kind).
NetworkWeights load_checkpoint(const std::filesystem::path& path);

struct TrainOptions {
  std::optional<std::filesystem::path> resume_from;
  std::ostream* progress = nullptr;  // human-readable progress, may be null
  // Polled between steps; when set, a checkpoint is written and train returns.
  const std::atomic<bool>* stop = nullptr;
};

struct TrainResult {
  LossReport last;
  long iterations = 0;
  std::filesystem::path final_checkpoint;
  std::filesystem::path log;
  bool stopped_early = false;
};

// Loads the exemplar and extractor named in the config, runs to
// total_iterations writing config.output_dir/{train.tsv, latest.ckpt,
// final.ckpt}. latest.ckpt is refreshed every checkpoint_every steps.
TrainResult train(const TrainingConfig& config, const TrainOptions& options = {});

// Extractor selected by a config: the archive when given, the in-memory
// stand-in when requested, otherwise none (style disabled with a warning).
std::optional<NetworkWeights> extractor_for(const TrainingConfig& config, std::ostream* warnings);

}  // namespace texpand

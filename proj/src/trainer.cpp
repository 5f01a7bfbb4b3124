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

#include "texpand/trainer.hpp"

#include <charconv>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "texpand/hash.hpp"

namespace texpand {
namespace {

constexpr const char* kCheckpointFormat = "1";

std::string number_text(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

TrainingBatch draw_batch(const ImagePlane& exemplar, const TrainingConfig& cfg, Rng& rng) {
  const int k = cfg.k;
  TrainingBatch b{Tensor(cfg.batch_size, 3, k, k), Tensor(cfg.batch_size, 3, 2 * k, 2 * k), {}};
  for (int n = 0; n < cfg.batch_size; ++n) {
    const BlockPair p = sample_block_pair(exemplar, k, rng, cfg.augment);
    std::copy(p.source.data(), p.source.data() + 3 * k * k, b.source.sample(n));
    std::copy(p.target.data(), p.target.data() + 12 * k * k, b.target.sample(n));
  }
  b.rng_after = rng_state(rng);
  return b;
}

LossReport parse_log_line(const std::string& line) {
  std::istringstream s(line);
  LossReport r;
  double lr = 0.0;
  if (!(s >> r.iteration >> lr >> r.adv_G >> r.adv_D >> r.l1 >> r.style >> r.total_G)) {
    fail("format", "malformed loss history line '" + line + "'");
  }
  return r;
}

std::string meta_or_fail(const NetworkWeights& w, const std::string& key) {
  const auto it = w.metadata.find(key);
  if (it == w.metadata.end()) fail("format", "checkpoint lacks '" + key + "'");
  return it->second;
}

std::string extractor_hash_of(const NetworkWeights* extractor) {
  return extractor ? hex64(weights_hash(*extractor)) : "none";
}

}  // namespace

// Draws batches on a worker thread into a bounded queue. The worker owns the
// RNG; batch order and contents equal serial drawing.
class BlockPrefetcher {
 public:
  BlockPrefetcher(const ImagePlane& exemplar, const TrainingConfig& cfg, Rng rng, std::size_t capacity)
      : capacity_(capacity), worker_([this, &exemplar, cfg, rng](std::stop_token st) mutable {
          run(st, exemplar, cfg, rng);
        }) {}

  ~BlockPrefetcher() {
    std::lock_guard lock(mu_);
    worker_.request_stop();
    cv_.notify_all();
  }

  TrainingBatch pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty() || error_; });
    if (queue_.empty()) std::rethrow_exception(error_);
    TrainingBatch b = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return b;
  }

 private:
  void run(std::stop_token st, const ImagePlane& exemplar, const TrainingConfig& cfg, Rng& rng) {
    try {
      while (!st.stop_requested()) {
        TrainingBatch b = draw_batch(exemplar, cfg, rng);
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return queue_.size() < capacity_ || st.stop_requested(); });
        if (st.stop_requested()) return;
        queue_.push_back(std::move(b));
        cv_.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mu_);
      error_ = std::current_exception();
      cv_.notify_all();
    }
  }

  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TrainingBatch> queue_;
  std::exception_ptr error_;
  std::jthread worker_;  // last: joined before the members above go away
};

double lr_schedule(long iteration, const TrainingConfig& c) {
  if (iteration < 0 || iteration > c.total_iterations) {
    fail("range", "iteration " + std::to_string(iteration) + " outside [0, " +
                      std::to_string(c.total_iterations) + "]");
  }
  if (iteration < c.lr_constant_until) return c.lr_initial;
  const long span = c.total_iterations - c.lr_constant_until;
  if (span == 0) return 0.0;
  return c.lr_initial * static_cast<double>(c.total_iterations - iteration) / static_cast<double>(span);
}

std::string log_header() { return "iteration\tlr\tadv_G\tadv_D\tl1\tstyle\ttotal_G"; }

std::string log_line(const LossReport& r, double lr) {
  return std::to_string(r.iteration) + "\t" + number_text(lr) + "\t" + number_text(r.adv_G) + "\t" +
         number_text(r.adv_D) + "\t" + number_text(r.l1) + "\t" + number_text(r.style) + "\t" +
         number_text(r.total_G);
}

Trainer::Trainer(TrainingConfig config, ImagePlane exemplar, const NetworkWeights* extractor)
    : config_(std::move(config)),
      exemplar_(std::move(exemplar)),
      generator_(config_.generator_spec()),
      discriminator_(config_.discriminator_spec()),
      extractor_hash_(extractor_hash_of(extractor)),
      style_layers_(StyleLayerSet::standard()),
      rng_(config_.seed) {
  config_.validate();
  const int t = 2 * config_.k;
  if (exemplar_.height() < t || exemplar_.width() < t) {
    fail("precondition", "exemplar " + std::to_string(exemplar_.height()) + "x" +
                             std::to_string(exemplar_.width()) + " is smaller than 2k = " +
                             std::to_string(t) + " on some side");
  }
  if (extractor) {
    extractor_ = std::make_unique<FeatureExtractor<float>>(FeatureExtractor<float>::from_weights(*extractor));
  }
  generator_.initialize(rng_);
  discriminator_.initialize(rng_);
  rng_consumed_ = rng_state(rng_);
  adam_g_ = std::make_unique<Adam<float>>(parameters_of(generator_.net()), config_.adam_beta1,
                                          config_.adam_beta2, config_.adam_epsilon);
  adam_d_ = std::make_unique<Adam<float>>(parameters_of(discriminator_.net()), config_.adam_beta1,
                                          config_.adam_beta2, config_.adam_epsilon);
}

Trainer::~Trainer() = default;

std::unique_ptr<Trainer> Trainer::resume(const NetworkWeights& ck, TrainingConfig config, ImagePlane exemplar,
                                         const NetworkWeights* extractor) {
  if (meta_or_fail(ck, "kind") != "checkpoint") fail("format", "archive is not a training checkpoint");
  if (meta_or_fail(ck, "format") != kCheckpointFormat) {
    fail("mismatch", "unsupported checkpoint format version " + meta_or_fail(ck, "format"));
  }
  const TrainingConfig stored = TrainingConfig::parse(meta_or_fail(ck, "config"), "<checkpoint config>");
  const auto diff = config.mismatched_fields(stored);
  if (!diff.empty()) {
    std::string list;
    for (const auto& d : diff) list += (list.empty() ? "" : ", ") + d;
    fail("mismatch", "config differs from the checkpoint in: " + list);
  }
  const std::string want = meta_or_fail(ck, "extractor.hash");
  if (want != extractor_hash_of(extractor)) {
    fail("mismatch", "extractor weights differ from the checkpoint's (hash " + want + " vs " +
                         extractor_hash_of(extractor) + ")");
  }
  auto t = std::make_unique<Trainer>(std::move(config), std::move(exemplar), extractor);
  import_state(t->generator_.net(), ck, "G/");
  import_state(t->discriminator_.net(), ck, "D/");
  t->adam_g_->load(ck, "adam.G.");
  t->adam_d_->load(ck, "adam.D.");
  t->iteration_ = std::stol(meta_or_fail(ck, "iteration"));
  t->rng_consumed_ = meta_or_fail(ck, "rng");
  restore_rng(t->rng_, t->rng_consumed_);
  std::istringstream hist(meta_or_fail(ck, "history"));
  for (std::string line; std::getline(hist, line);) {
    if (!line.empty()) t->history_.push_back(parse_log_line(line));
  }
  return t;
}

TrainingBatch Trainer::next_batch() {
  if (config_.deterministic) return draw_batch(exemplar_, config_, rng_);
  if (!prefetch_) prefetch_ = std::make_unique<BlockPrefetcher>(exemplar_, config_, rng_, 4);
  return prefetch_->pop();
}

void Trainer::abort_non_finite(const LossReport& r, const char* stage) {
  std::string where;
  if (!config_.output_dir.empty()) {
    const auto path = std::filesystem::path(config_.output_dir) / "diagnostic.ckpt";
    try {
      std::filesystem::create_directories(config_.output_dir);
      save_checkpoint(checkpoint(), path);
      where = "; state saved to " + path.string();
    } catch (const std::exception& e) {
      where = std::string("; diagnostic checkpoint failed: ") + e.what();
    }
  }
  fail("nonfinite", std::string("non-finite loss during the ") + stage + " update at iteration " +
                        std::to_string(r.iteration) + " (" + log_line(r, lr_schedule(iteration_, config_)) +
                        ")" + where);
}

LossReport Trainer::step() {
  if (iteration_ >= config_.total_iterations) fail("state", "training already reached total_iterations");
  const double lr = lr_schedule(iteration_, config_);
  TrainingBatch batch = next_batch();
  const LossWeights& w = config_.loss;

  LossReport r;
  r.iteration = iteration_ + 1;
  const Tensor fake = generator_.forward(batch.source, Mode::train);

  if (w.enable_adv) {
    auto& d = discriminator_;
    zero_grad(d.net());
    Tensor g;
    const double real_loss = binary_cross_entropy(d.forward(batch.target, Mode::train), 1.0, &g);
    d.backward(g, false);
    const double fake_loss = binary_cross_entropy(d.forward(fake, Mode::train), 0.0, &g);
    d.backward(g, false);
    r.adv_D = real_loss + fake_loss;
    if (!std::isfinite(r.adv_D)) abort_non_finite(r, "discriminator");
    adam_d_->step(lr);
  }

  zero_grad(generator_.net());
  Tensor grad_fake(fake.shape());
  auto accumulate = [&](const Tensor& g, double scale) {
    for (std::size_t i = 0; i < grad_fake.size(); ++i) grad_fake[i] += static_cast<float>(scale) * g[i];
  };
  if (w.enable_adv) {
    auto& d = discriminator_;
    d.net().set_frozen(true);
    Tensor g;
    r.adv_G = binary_cross_entropy(d.forward(fake, Mode::train), 1.0, &g);
    accumulate(d.backward(g, true), 1.0);
    d.net().set_frozen(false);
  }
  {
    Tensor g;
    r.l1 = l1_loss(fake, batch.target, w.enable_l1 ? &g : nullptr);
    if (w.enable_l1) accumulate(g, w.lambda1);
  }
  if (extractor_) {
    Tensor g;
    r.style = style_loss(*extractor_, fake, batch.target, style_layers_, w.enable_style ? &g : nullptr);
    if (w.enable_style) accumulate(g, w.lambda2);
  }
  r.total_G = total_objective(r, w);
  if (!r.finite()) abort_non_finite(r, "generator");
  generator_.backward(grad_fake, false);
  adam_g_->step(lr);

  ++iteration_;
  rng_consumed_ = std::move(batch.rng_after);
  history_.push_back(r);
  if (static_cast<long>(history_.size()) > config_.history_length) history_.erase(history_.begin());
  return r;
}

NetworkWeights Trainer::checkpoint() const {
  // Export only reads the networks.
  auto& self = const_cast<Trainer&>(*this);
  NetworkWeights ck;
  export_state(self.generator_.net(), ck, "G/");
  export_state(self.discriminator_.net(), ck, "D/");
  adam_g_->save(ck, "adam.G.");
  adam_d_->save(ck, "adam.D.");
  ck.metadata["kind"] = "checkpoint";
  ck.metadata["format"] = kCheckpointFormat;
  ck.metadata["iteration"] = std::to_string(iteration_);
  ck.metadata["rng"] = rng_consumed_;
  ck.metadata["config"] = config_.serialize();
  ck.metadata["generator.spec"] = generator_.spec().canonical();
  ck.metadata["discriminator.spec"] = discriminator_.spec().canonical();
  ck.metadata["extractor.hash"] = extractor_hash_;
  std::string hist;
  for (const auto& r : history_) {
    const double lr = lr_schedule(r.iteration - 1, config_);
    hist += log_line(r, lr) + "\n";
  }
  ck.metadata["history"] = hist;
  return ck;
}

void save_checkpoint(const NetworkWeights& ck, const std::filesystem::path& path) {
  save_weights(ck, path);
  std::string meta = "kind = checkpoint\n";
  for (const char* key : {"format", "iteration", "generator.spec", "discriminator.spec", "extractor.hash"}) {
    const auto it = ck.metadata.find(key);
    if (it != ck.metadata.end()) meta += std::string(key) + " = " + it->second + "\n";
  }
  meta += "archive_hash = " + hex64(file_hash(path)) + "\n";
  const auto sidecar = std::filesystem::path(path.string() + ".meta");
  const auto tmp = std::filesystem::path(sidecar.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!(out << meta)) fail("io", "cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, sidecar);
}

NetworkWeights load_checkpoint(const std::filesystem::path& path) {
  NetworkWeights ck = load_weights(path);
  if (meta_or_fail(ck, "kind") != "checkpoint") fail("format", "'" + path.string() + "' is not a checkpoint");
  const auto sidecar = std::filesystem::path(path.string() + ".meta");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    const std::string actual = hex64(file_hash(path));
    for (std::string line; std::getline(in, line);) {
      const std::string prefix = "archive_hash = ";
      if (line.rfind(prefix, 0) == 0 && line.substr(prefix.size()) != actual) {
        fail("integrity", "'" + path.string() + "' does not match the hash recorded in " + sidecar.string());
      }
    }
  }
  return ck;
}

std::optional<NetworkWeights> extractor_for(const TrainingConfig& config, std::ostream* warnings) {
  if (!config.extractor.empty()) return load_extractor(config.extractor);
  if (config.extractor_standin_divisor > 0) {
    return make_standin_extractor(config.extractor_standin_divisor, config.extractor_standin_seed);
  }
  if (warnings) {
    *warnings << "WARNING: no feature extractor configured; the style loss is disabled for this run.\n"
                 "WARNING: set 'extractor' to a converted VGG-19 archive (scripts/fetch_vgg19.py) or\n"
                 "WARNING: 'extractor_standin_divisor' to use random stand-in features.\n";
  }
  return std::nullopt;
}

TrainResult train(const TrainingConfig& config, const TrainOptions& options) {
  config.validate();
  const ImagePlane exemplar = load_image(config.exemplar);
  std::ostream* progress = options.progress;
  const auto extractor = extractor_for(config, progress ? progress : &std::cerr);
  const NetworkWeights* ex = extractor ? &*extractor : nullptr;

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  TrainResult result;
  result.log = dir / "train.tsv";

  std::unique_ptr<Trainer> trainer;
  std::vector<std::string> kept;
  if (options.resume_from) {
    trainer = Trainer::resume(load_checkpoint(*options.resume_from), config, exemplar, ex);
    // Drop log lines past the checkpoint so the log matches an uninterrupted run.
    std::ifstream in(result.log);
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line == log_header()) continue;
      if (parse_log_line(line).iteration <= trainer->iteration()) kept.push_back(line);
    }
  } else {
    trainer = std::make_unique<Trainer>(config, exemplar, ex);
  }
  std::ofstream log(result.log, std::ios::trunc);
  log << log_header() << "\n";
  for (const auto& line : kept) log << line << "\n";
  log.flush();

  const auto latest = dir / "latest.ckpt";
  while (trainer->iteration() < config.total_iterations) {
    const double lr = lr_schedule(trainer->iteration(), config);
    result.last = trainer->step();
    const long it = trainer->iteration();
    if (it % config.log_every == 0) {
      log << log_line(result.last, lr) << "\n";
      log.flush();
    }
    const bool stop = options.stop && options.stop->load();
    if (it % config.checkpoint_every == 0 || stop) {
      save_checkpoint(trainer->checkpoint(), latest);
      if (progress) {
        *progress << "iteration " << it << "/" << config.total_iterations << "  style " << result.last.style
                  << "  l1 " << result.last.l1 << "  checkpoint " << latest.string() << "\n";
      }
    }
    if (stop) {
      result.stopped_early = true;
      result.iterations = it;
      result.final_checkpoint = latest;
      return result;
    }
  }
  result.iterations = trainer->iteration();
  result.final_checkpoint = dir / "final.ckpt";
  const NetworkWeights ck = trainer->checkpoint();
  save_checkpoint(ck, result.final_checkpoint);
  save_checkpoint(ck, latest);
  return result;
}

}  // namespace texpand

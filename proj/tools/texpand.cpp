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

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "texpand/config.hpp"
#include "texpand/extractor.hpp"
#include "texpand/generator.hpp"
#include "texpand/hash.hpp"
#include "texpand/image.hpp"
#include "texpand/synthesis.hpp"
#include "texpand/trainer.hpp"

namespace fs = std::filesystem;
using namespace texpand;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

std::string quoted(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int report_error(const std::string& code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=\"" << quoted(message) << "\"\n";
  return 1;
}

std::pair<int, int> parse_pair(const std::string& s, const char* what) {
  const auto x = s.find('x');
  try {
    if (x != std::string::npos) return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::logic_error&) {
  }
  fail("config", std::string("bad ") + what + " '" + s + "' (expected AxB)");
}

void save(const ImagePlane& img, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_image(clamp_image(img), path);
  std::cout << path.string() << " " << img.height() << "x" << img.width() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"texpand: example-based texture expansion with a per-exemplar adversarial generator"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "random seed")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a generator on one exemplar");
  std::string config_path, resume_path;
  bool seed_given = false;
  train_cmd->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--resume", resume_path, "checkpoint to continue from")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", seed, "overrides the config seed")->each([&](const std::string&) { seed_given = true; });

  // expand
  auto* expand_cmd = app.add_subcommand("expand", "double an image (repeatedly) with a trained generator");
  std::string checkpoint, input, output;
  int cycles = 1;
  bool recrop = false;
  std::int64_t budget = kDefaultPixelBudget;
  expand_cmd->add_option("--checkpoint", checkpoint, "generator archive or training checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  expand_cmd->add_option("--input", input, "input PNG")->required()->check(CLI::ExistingFile);
  expand_cmd->add_option("--output", output, "output PNG")->required();
  expand_cmd->add_option("--cycles", cycles, "number of expansions")->capture_default_str();
  expand_cmd->add_flag("--recrop", recrop, "crop back to the input size between cycles");
  expand_cmd->add_option("--pixel-budget", budget, "largest allowed intermediate, pixels")->capture_default_str();
  expand_cmd->add_option("--seed", seed, "random seed");

  // diversify
  auto* div_cmd = app.add_subcommand("diversify", "expand a perturbed exemplar for output variety");
  std::string mode = "crop", crop_size = "256x256", grid = "4x4";
  double amplitude = 0.1;
  div_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  div_cmd->add_option("--input", input, "exemplar PNG")->required()->check(CLI::ExistingFile);
  div_cmd->add_option("--output", output, "output PNG")->required();
  div_cmd->add_option("--mode", mode, "crop | shuffle | noise")->capture_default_str();
  div_cmd->add_option("--crop-size", crop_size, "HxW of the random crop")->capture_default_str();
  div_cmd->add_option("--grid", grid, "RxC tile grid for shuffle")->capture_default_str();
  div_cmd->add_option("--amplitude", amplitude, "noise amplitude")->capture_default_str();
  div_cmd->add_option("--seed", seed, "random seed");

  // transfer
  auto* transfer_cmd = app.add_subcommand("transfer", "synthesize texture following a guide image");
  std::string guide;
  transfer_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--guide", guide, "guide PNG (gray or RGB)")->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--output", output, "output PNG")->required();
  transfer_cmd->add_option("--seed", seed, "random seed");

  // stress
  auto* stress_cmd = app.add_subcommand("stress", "repeated expand-and-recrop stability test");
  std::string out_dir = "stress";
  stress_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  stress_cmd->add_option("--input", input, "exemplar PNG")->required()->check(CLI::ExistingFile);
  stress_cmd->add_option("--output-dir", out_dir, "directory for per-cycle images")->capture_default_str();
  stress_cmd->add_option("--cycles", cycles, "number of cycles")->capture_default_str();
  stress_cmd->add_option("--seed", seed, "random seed");

  // features
  auto* feat_cmd = app.add_subcommand("features", "visualize a generator stage's feature maps");
  std::string layer, compare;
  int channel = -1;
  feat_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--input", input, "input PNG")->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--layer", layer, "relu, resblock_N or conv")->required();
  feat_cmd->add_option("--output", output, "output PNG");
  feat_cmd->add_option("--channel", channel, "single channel instead of the channel mean");
  feat_cmd->add_option("--compare", compare, "print ||layer - compare|| / ||compare||");
  feat_cmd->add_option("--seed", seed, "random seed");

  // init-extractor
  auto* ext_cmd = app.add_subcommand("init-extractor", "write a random stand-in feature extractor archive");
  int divisor = 1;
  ext_cmd->add_option("--output", output, "archive path")->required();
  ext_cmd->add_option("--width-divisor", divisor, "divide VGG-19 widths by this")->capture_default_str();
  ext_cmd->add_option("--seed", seed, "random seed");

  // init-generator
  auto* gen_cmd = app.add_subcommand("init-generator", "write a randomly initialized generator archive");
  int base = 64, resblocks = 6;
  gen_cmd->add_option("--output", output, "archive path")->required();
  gen_cmd->add_option("--base-channels", base)->capture_default_str();
  gen_cmd->add_option("--resblocks", resblocks)->capture_default_str();
  gen_cmd->add_option("--seed", seed, "random seed");

  // noise
  auto* noise_cmd = app.add_subcommand("noise", "write a Perlin noise guide image");
  std::string size = "256x256";
  int octaves = 4;
  noise_cmd->add_option("--size", size, "HxW")->capture_default_str();
  noise_cmd->add_option("--octaves", octaves)->capture_default_str();
  noise_cmd->add_option("--output", output, "output PNG")->required();
  noise_cmd->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (*train_cmd) {
      TrainingConfig cfg = TrainingConfig::load(config_path);
      if (seed_given) cfg.seed = seed;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      TrainOptions opts;
      if (!resume_path.empty()) opts.resume_from = fs::path(resume_path);
      opts.progress = &std::cout;
      opts.stop = &g_stop;
      const TrainResult r = train(cfg, opts);
      std::cout << (r.stopped_early ? "stopped" : "finished") << " at iteration " << r.iterations
                << "; checkpoint " << r.final_checkpoint.string() << "; log " << r.log.string() << "\n";
    } else if (*expand_cmd) {
      const TrainedGenerator g = load_generator(checkpoint);
      ExpansionJob job{cycles, recrop ? CropPolicy::recrop_to_original : CropPolicy::none, seed, budget};
      save(expand_repeated(g, load_image(input), job), output);
    } else if (*div_cmd) {
      const TrainedGenerator g = load_generator(checkpoint);
      DiversifyParams p;
      p.mode = parse_diversify_mode(mode);
      std::tie(p.crop_height, p.crop_width) = parse_pair(crop_size, "crop size");
      std::tie(p.grid_rows, p.grid_cols) = parse_pair(grid, "grid");
      p.noise_amplitude = amplitude;
      Rng rng(seed);
      save(diversify(g, load_image(input), p, rng).output, output);
    } else if (*transfer_cmd) {
      const TrainedGenerator g = load_generator(checkpoint);
      save(transfer(g, load_image(guide, GrayPolicy::replicate)), output);
    } else if (*stress_cmd) {
      const std::uint64_t before = file_hash(checkpoint);
      const TrainedGenerator g = load_generator(checkpoint);
      Rng rng(seed);
      const auto runs = stress_test(g, load_image(input), cycles, rng);
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto stem = fs::path(out_dir) / ("cycle_" + std::to_string(i + 1));
        save(runs[i].expanded, stem.string() + "_expanded.png");
        save(runs[i].cropped, stem.string() + "_crop.png");
      }
      if (file_hash(checkpoint) != before) fail("integrity", "checkpoint changed during the stress test");
    } else if (*feat_cmd) {
      const TrainedGenerator g = load_generator(checkpoint);
      const ImagePlane img = load_image(input);
      if (!compare.empty()) {
        std::cout << layer << " vs " << compare << ": "
                  << feature_map_difference(g.weights, g.spec, img, layer, compare) << "\n";
      }
      if (!output.empty()) save(visualize_features(g.weights, g.spec, img, layer, channel), output);
    } else if (*ext_cmd) {
      save_weights(make_standin_extractor(divisor, seed), output);
      std::cout << output << "\n";
    } else if (*gen_cmd) {
      Rng rng(seed);
      save_weights(build_generator(GeneratorSpec::standard(base, resblocks), rng), output);
      std::cout << output << "\n";
    } else if (*noise_cmd) {
      const auto [h, w] = parse_pair(size, "size");
      save(noise_image(perlin(h, w, seed, octaves)), output);
    }
  } catch (const Error& e) {
    return report_error(e.code(), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}

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

#include "texpand/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace texpand {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
std::string to_text(N v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename N>
N from_text(const std::string& key, const std::string& s) {
  N v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail("config", "bad value '" + s + "' for key '" + key + "'");
  }
  return v;
}

bool bool_from_text(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail("config", "bad boolean '" + s + "' for key '" + key + "' (use true/false)");
}

struct Field {
  const char* key;
  bool affects_run;
  std::function<std::string(const TrainingConfig&)> get;
  std::function<void(TrainingConfig&, const std::string&)> set;
};

template <typename N>
Field number(const char* key, bool affects, N TrainingConfig::*member) {
  return {key, affects, [member](const TrainingConfig& c) { return to_text(c.*member); },
          [member, key](TrainingConfig& c, const std::string& v) { c.*member = from_text<N>(key, v); }};
}

Field text(const char* key, bool affects, std::string TrainingConfig::*member) {
  return {key, affects, [member](const TrainingConfig& c) { return c.*member; },
          [member](TrainingConfig& c, const std::string& v) { c.*member = v; }};
}

Field flag(const char* key, bool affects, bool TrainingConfig::*member) {
  return {key, affects, [member](const TrainingConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member, key](TrainingConfig& c, const std::string& v) { c.*member = bool_from_text(key, v); }};
}

template <typename N>
Field loss_number(const char* key, N LossWeights::*member) {
  return {key, true, [member](const TrainingConfig& c) { return to_text(c.loss.*member); },
          [member, key](TrainingConfig& c, const std::string& v) { c.loss.*member = from_text<N>(key, v); }};
}

Field loss_flag(const char* key, bool LossWeights::*member) {
  return {key, true, [member](const TrainingConfig& c) { return std::string(c.loss.*member ? "true" : "false"); },
          [member, key](TrainingConfig& c, const std::string& v) { c.loss.*member = bool_from_text(key, v); }};
}

const std::vector<Field>& fields() {
  using C = TrainingConfig;
  static const std::vector<Field> f{
      text("exemplar", false, &C::exemplar),
      text("output_dir", false, &C::output_dir),
      number("k", true, &C::k),
      number("total_iterations", true, &C::total_iterations),
      number("lr_initial", true, &C::lr_initial),
      number("lr_constant_until", true, &C::lr_constant_until),
      number("adam_beta1", true, &C::adam_beta1),
      number("adam_beta2", true, &C::adam_beta2),
      number("adam_epsilon", true, &C::adam_epsilon),
      number("batch_size", true, &C::batch_size),
      loss_number("lambda1", &LossWeights::lambda1),
      loss_number("lambda2", &LossWeights::lambda2),
      loss_flag("enable_adv", &LossWeights::enable_adv),
      loss_flag("enable_l1", &LossWeights::enable_l1),
      loss_flag("enable_style", &LossWeights::enable_style),
      flag("augment", true, &C::augment),
      number("generator_base_channels", true, &C::generator_base_channels),
      number("generator_resblocks", true, &C::generator_resblocks),
      number("discriminator_layers", true, &C::discriminator_layers),
      number("discriminator_base_channels", true, &C::discriminator_base_channels),
      number("discriminator_channel_cap", true, &C::discriminator_channel_cap),
      text("extractor", false, &C::extractor),
      number("extractor_standin_divisor", true, &C::extractor_standin_divisor),
      number("extractor_standin_seed", true, &C::extractor_standin_seed),
      number("seed", true, &C::seed),
      number("checkpoint_every", false, &C::checkpoint_every),
      number("log_every", false, &C::log_every),
      number("history_length", false, &C::history_length),
      flag("deterministic", false, &C::deterministic),
  };
  return f;
}

}  // namespace

GeneratorSpec TrainingConfig::generator_spec() const {
  return GeneratorSpec::standard(generator_base_channels, generator_resblocks);
}

DiscriminatorSpec TrainingConfig::discriminator_spec() const {
  DiscriminatorSpec d;
  d.num_conv_layers = discriminator_layers;
  d.base_channels = discriminator_base_channels;
  d.channel_cap = discriminator_channel_cap;
  return d;
}

void TrainingConfig::validate() const {
  auto bad = [](const std::string& why) { fail("config", why); };
  if (k < 16 || k % 4 != 0) bad("k must be at least 16 and divisible by 4, got " + std::to_string(k));
  if (total_iterations < 1) bad("total_iterations must be positive");
  if (lr_constant_until < 0 || lr_constant_until > total_iterations) {
    bad("lr_constant_until must lie in [0, total_iterations]");
  }
  if (!(lr_initial > 0.0)) bad("lr_initial must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    bad("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) bad("adam_epsilon must be positive");
  if (batch_size < 1) bad("batch_size must be positive");
  if (loss.lambda1 < 0.0 || loss.lambda2 < 0.0) bad("loss weights must be non-negative");
  if (!loss.enable_adv && !loss.enable_l1 && !loss.enable_style) bad("at least one loss term must be enabled");
  if (checkpoint_every < 1 || log_every < 1 || history_length < 1) {
    bad("checkpoint_every, log_every and history_length must be positive");
  }
  if (extractor_standin_divisor < 0) bad("extractor_standin_divisor must be non-negative");
  generator_spec().validate();
  discriminator_spec().validate();
}

std::string TrainingConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

TrainingConfig TrainingConfig::parse(const std::string& text, const std::string& source) {
  TrainingConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) fail("config", where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& fs = fields();
    const auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return key == f.key; });
    if (it == fs.end()) fail("config", where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) fail("config", where + ": duplicate key '" + key + "'");
    try {
      it->set(c, value);
    } catch (const Error& e) {
      fail("config", where + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

TrainingConfig TrainingConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io", "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::vector<std::string> TrainingConfig::mismatched_fields(const TrainingConfig& other) const {
  std::vector<std::string> out;
  for (const auto& f : fields()) {
    if (f.affects_run && f.get(*this) != f.get(other)) {
      out.push_back(std::string(f.key) + " (" + f.get(other) + " vs " + f.get(*this) + ")");
    }
  }
  return out;
}

}  // namespace texpand

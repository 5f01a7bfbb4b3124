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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "texpand/layers.hpp"
#include "texpand/tensor.hpp"

namespace texpand {

// Named float32 tensors plus string metadata. Generators, discriminators,
// feature extractors and full training checkpoints all use this container.
//
// On-disk layout (the "named-tensor archive"):
//
//   TEXPAND-WEIGHTS 1\n
//   meta <key> <value>\n          value escaped: '\\' -> "\\\\", newline -> "\\n"
//   tensor <name> f32 <d0,d1,..> <offset> <bytes>\n
//   checksum <16 hex digits>\n    FNV-1a 64 over the preceding lines + payload
//   end\n
//   <payload: little-endian float32, tensors in header order>
//
// Shapes are the tensor's NCHW shape with trailing unit dimensions dropped.
struct NetworkWeights {
  std::map<std::string, Tensor> entries;
  std::map<std::string, std::string> metadata;

  bool operator==(const NetworkWeights& other) const;
};

std::string serialize_weights(const NetworkWeights& weights);
NetworkWeights deserialize_weights(std::string_view bytes, const std::string& source = "<memory>");

// Writes via a temporary file and rename, so readers never see a partial file.
void save_weights(const NetworkWeights& weights, const std::filesystem::path& path);
NetworkWeights load_weights(const std::filesystem::path& path);

std::uint64_t file_hash(const std::filesystem::path& path);
// Hash of the serialized form; equal weights give equal hashes.
std::uint64_t weights_hash(const NetworkWeights& weights);

// Network state (parameters + buffers) <-> named tensors. `prefix` is
// prepended to every name. Import checks names and shapes and fails naming
// the first offending entry.
template <typename T>
void export_state(Layer<T>& net, NetworkWeights& out, const std::string& prefix = "");
template <typename T>
void import_state(Layer<T>& net, const NetworkWeights& in, const std::string& prefix = "");

std::vector<int> trimmed_dims(const Shape4& s);

}  // namespace texpand

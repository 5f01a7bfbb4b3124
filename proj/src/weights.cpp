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

#include "texpand/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "texpand/hash.hpp"

namespace texpand {
namespace {

constexpr std::string_view kMagic = "TEXPAND-WEIGHTS 1\n";

std::string escape(const std::string& v) {
  std::string out;
  out.reserve(v.size());
  for (char ch : v) {
    if (ch == '\\') {
      out += "\\\\";
    } else if (ch == '\n') {
      out += "\\n";
    } else {
      out += ch;
    }
  }
  return out;
}

std::string unescape(std::string_view v, const std::string& source) {
  std::string out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '\\') {
      out += v[i];
      continue;
    }
    if (i + 1 >= v.size()) fail("format", source + ": dangling escape in metadata");
    const char next = v[++i];
    if (next == 'n') {
      out += '\n';
    } else if (next == '\\') {
      out += '\\';
    } else {
      fail("format", source + ": unknown escape in metadata");
    }
  }
  return out;
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n\r") != std::string::npos) {
    fail("format", "archive names must be non-empty without whitespace: '" + name + "'");
  }
}

std::string dims_text(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(dims[i]);
  }
  return s;
}

void put_le32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xffu);
}

float get_le32(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

bool NetworkWeights::operator==(const NetworkWeights& other) const {
  if (metadata != other.metadata || entries.size() != other.entries.size()) return false;
  auto a = entries.begin();
  auto b = other.entries.begin();
  for (; a != entries.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape() != b->second.shape()) return false;
    if (std::memcmp(a->second.data(), b->second.data(), a->second.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

std::vector<int> trimmed_dims(const Shape4& s) {
  std::vector<int> dims{s.n, s.c, s.h, s.w};
  while (dims.size() > 1 && dims.back() == 1) dims.pop_back();
  return dims;
}

std::string serialize_weights(const NetworkWeights& weights) {
  std::string header;
  for (const auto& [key, value] : weights.metadata) {
    check_name(key);
    header += "meta " + key + " " + escape(value) + "\n";
  }
  std::size_t offset = 0;
  for (const auto& [name, t] : weights.entries) {
    check_name(name);
    const std::size_t bytes = t.size() * 4;
    header += "tensor " + name + " f32 " + dims_text(trimmed_dims(t.shape())) + " " +
              std::to_string(offset) + " " + std::to_string(bytes) + "\n";
    offset += bytes;
  }
  std::string payload;
  payload.reserve(offset);
  for (const auto& [name, t] : weights.entries) {
    for (std::size_t i = 0; i < t.size(); ++i) put_le32(payload, t[i]);
  }
  Fnv1a h;
  h.update(header);
  h.update(payload);
  std::string out(kMagic);
  out += header;
  out += "checksum " + hex64(h.digest()) + "\n";
  out += "end\n";
  out += payload;
  return out;
}

NetworkWeights deserialize_weights(std::string_view bytes, const std::string& source) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    fail("format", source + ": not a texpand weight archive");
  }
  struct Pending {
    std::string name;
    Shape4 shape;
    std::size_t offset;
    std::size_t bytes;
  };
  NetworkWeights out;
  std::vector<Pending> pending;
  std::size_t pos = kMagic.size();
  std::size_t header_begin = pos;
  std::size_t header_end = std::string_view::npos;
  std::string checksum;
  for (;;) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) fail("integrity", source + ": truncated header");
    const std::string_view line = bytes.substr(pos, nl - pos);
    const std::size_t line_begin = pos;
    pos = nl + 1;
    if (line == "end") break;
    const std::size_t sp = line.find(' ');
    const std::string_view kind = line.substr(0, sp);
    const std::string_view rest = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    if (kind == "meta") {
      const std::size_t sp2 = rest.find(' ');
      if (sp2 == std::string_view::npos) fail("format", source + ": malformed meta line");
      out.metadata[std::string(rest.substr(0, sp2))] = unescape(rest.substr(sp2 + 1), source);
    } else if (kind == "tensor") {
      std::istringstream ls{std::string(rest)};
      std::string name, dtype, dims;
      std::size_t offset = 0, nbytes = 0;
      if (!(ls >> name >> dtype >> dims >> offset >> nbytes) || dtype != "f32") {
        fail("format", source + ": malformed tensor line");
      }
      std::vector<int> d;
      std::stringstream ds(dims);
      for (std::string part; std::getline(ds, part, ',');) d.push_back(std::stoi(part));
      if (d.empty() || d.size() > 4) fail("format", source + ": bad shape for " + name);
      while (d.size() < 4) d.push_back(1);
      Shape4 shape{d[0], d[1], d[2], d[3]};
      if (shape.numel() * 4 != nbytes) fail("format", source + ": size mismatch for " + name);
      pending.push_back({name, shape, offset, nbytes});
    } else if (kind == "checksum") {
      header_end = line_begin;
      checksum = std::string(rest);
    } else {
      fail("format", source + ": unknown header line '" + std::string(line) + "'");
    }
  }
  if (header_end == std::string_view::npos) fail("integrity", source + ": missing checksum");
  const std::string_view payload = bytes.substr(pos);
  Fnv1a h;
  h.update(bytes.substr(header_begin, header_end - header_begin));
  h.update(payload);
  if (hex64(h.digest()) != checksum) {
    fail("integrity", source + ": checksum mismatch (corrupted or truncated archive)");
  }
  for (const auto& p : pending) {
    if (p.offset + p.bytes > payload.size()) fail("integrity", source + ": payload truncated");
    Tensor t(p.shape);
    const auto* src = reinterpret_cast<const unsigned char*>(payload.data() + p.offset);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = get_le32(src + 4 * i);
    out.entries.emplace(p.name, std::move(t));
  }
  return out;
}

void save_weights(const NetworkWeights& weights, const std::filesystem::path& path) {
  const std::string bytes = serialize_weights(weights);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail("io", "cannot open '" + tmp.string() + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail("io", "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail("io", "cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

namespace {
std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("io", "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}
}  // namespace

NetworkWeights load_weights(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail("io", "weight archive not found: " + path.string());
  return deserialize_weights(read_file(path), path.string());
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  Fnv1a h;
  h.update(read_file(path));
  return h.digest();
}

std::uint64_t weights_hash(const NetworkWeights& weights) {
  Fnv1a h;
  h.update(serialize_weights(weights));
  return h.digest();
}

template <typename T>
void export_state(Layer<T>& net, NetworkWeights& out, const std::string& prefix) {
  for (Param<T>* p : state_of(net)) {
    out.entries[prefix + p->name] = p->value.template cast<float>();
  }
}

template <typename T>
void import_state(Layer<T>& net, const NetworkWeights& in, const std::string& prefix) {
  for (Param<T>* p : state_of(net)) {
    const auto it = in.entries.find(prefix + p->name);
    if (it == in.entries.end()) fail("mismatch", "weights are missing '" + prefix + p->name + "'");
    if (it->second.shape() != p->value.shape()) {
      fail("mismatch", "shape of '" + prefix + p->name + "' is " + it->second.shape().str() +
                           ", network expects " + p->value.shape().str());
    }
    p->value = it->second.template cast<T>();
  }
}

template void export_state<float>(Layer<float>&, NetworkWeights&, const std::string&);
template void export_state<double>(Layer<double>&, NetworkWeights&, const std::string&);
template void import_state<float>(Layer<float>&, const NetworkWeights&, const std::string&);
template void import_state<double>(Layer<double>&, const NetworkWeights&, const std::string&);

}  // namespace texpand

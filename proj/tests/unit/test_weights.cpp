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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "texpand/weights.hpp"

using namespace texpand;

namespace {

NetworkWeights sample_weights() {
  NetworkWeights w;
  w.entries["a.weight"] = test::random_tensor<float>({4, 3, 3, 3}, 1);
  w.entries["a.bias"] = test::random_tensor<float>({4, 1, 1, 1}, 2);
  w.entries["b/nested.name"] = test::random_tensor<float>({1, 1, 1, 7}, 3);
  w.metadata["kind"] = "test";
  w.metadata["multi"] = "line one\nline two \\ with slash";
  return w;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("archive round trip is bit-exact, including metadata with newlines") {
  const NetworkWeights w = sample_weights();
  const NetworkWeights back = deserialize_weights(serialize_weights(w));
  CHECK(back == w);
  CHECK(back.entries.at("a.weight").shape() == w.entries.at("a.weight").shape());
  CHECK(back.metadata.at("multi") == w.metadata.at("multi"));
  CHECK(weights_hash(back) == weights_hash(w));
}

TEST_CASE("files are written atomically and reload identically") {
  const auto dir = test::scratch_dir("weights_file");
  const NetworkWeights w = sample_weights();
  save_weights(w, dir / "w.bin");
  CHECK(std::filesystem::exists(dir / "w.bin"));
  CHECK_FALSE(std::filesystem::exists(dir / "w.bin.tmp"));
  CHECK(load_weights(dir / "w.bin") == w);
  CHECK_THROWS_AS(load_weights(dir / "absent.bin"), Error);
}

TEST_CASE("a flipped payload byte is reported as an integrity error") {
  std::string bytes = serialize_weights(sample_weights());
  bytes[bytes.size() - 5] ^= 0x40;
  try {
    deserialize_weights(bytes);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "integrity");
  }
}

TEST_CASE("entry names with whitespace cannot be written") {
  NetworkWeights w;
  w.entries["bad name"] = Tensor(1, 1, 1, 1);
  CHECK_THROWS_AS(serialize_weights(w), Error);
}

TEST_CASE("truncated and malformed archives are rejected") {
  const std::string bytes = serialize_weights(sample_weights());
  CHECK_THROWS_AS(deserialize_weights(bytes.substr(0, bytes.size() - 4)), Error);
  CHECK_THROWS_AS(deserialize_weights("TEXPAND-WEIGHTS 9\nend\n"), Error);
  CHECK_THROWS_AS(deserialize_weights(""), Error);
}

TEST_CASE("state export and import through a network, with name and shape checks") {
  Sequential<float> net("n");
  net.emplace<Conv2d<float>>("c", 2, 3, 3, 1, 1, kernels::Padding::zero, true);
  net.emplace<BatchNorm2d<float>>("c.bn", 3);
  Rng rng(1);
  initialize_normal(net, rng);
  NetworkWeights w;
  export_state(net, w, "G/");
  CHECK(w.entries.count("G/c.weight") == 1);
  CHECK(w.entries.count("G/c.bn.running_var") == 1);

  Sequential<float> other("n");
  other.emplace<Conv2d<float>>("c", 2, 3, 3, 1, 1, kernels::Padding::zero, true);
  other.emplace<BatchNorm2d<float>>("c.bn", 3);
  import_state(other, w, "G/");
  NetworkWeights again;
  export_state(other, again, "G/");
  CHECK(again == w);

  Sequential<float> wrong("n");
  wrong.emplace<Conv2d<float>>("c", 2, 4, 3, 1, 1, kernels::Padding::zero, true);
  CHECK_THROWS_WITH_AS(import_state(wrong, w, "G/"), doctest::Contains("c.weight"), Error);
  CHECK_THROWS_AS(import_state(other, w, "D/"), Error);
}

TEST_CASE("trimmed dims drop trailing unit dimensions only") {
  CHECK(trimmed_dims({4, 1, 1, 1}) == std::vector<int>{4});
  CHECK(trimmed_dims({1, 1, 1, 7}) == std::vector<int>{1, 1, 1, 7});
  CHECK(trimmed_dims({2, 3, 1, 5}) == std::vector<int>{2, 3, 1, 5});
}

TEST_CASE("file hash changes with content") {
  const auto dir = test::scratch_dir("weights_hash");
  NetworkWeights w = sample_weights();
  save_weights(w, dir / "a.bin");
  const auto h1 = file_hash(dir / "a.bin");
  w.entries["a.bias"][0] += 1.0f;
  save_weights(w, dir / "a.bin");
  CHECK(file_hash(dir / "a.bin") != h1);
  CHECK(read_file(dir / "a.bin").rfind("TEXPAND-WEIGHTS 1\n", 0) == 0);
}

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

// Parallel kernels vs. the serial reference on the convolution shapes that
// dominate a desk-scale training step.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "texpand/kernels.hpp"
#include "texpand/reference/kernels.hpp"

namespace {

using texpand::kernels::ConvGeometry;
using texpand::kernels::Padding;

std::vector<float> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

void BM_GemmParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto a = random_vector(static_cast<std::size_t>(n) * n, 1);
  auto b = random_vector(static_cast<std::size_t>(n) * n, 2);
  std::vector<float> c(static_cast<std::size_t>(n) * n);
  for (auto _ : state) {
    texpand::kernels::gemm<float>(false, false, n, n, n, 1.0f, a.data(), n, b.data(), n, 0.0f,
                                  c.data(), n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

void BM_GemmReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto a = random_vector(static_cast<std::size_t>(n) * n, 1);
  auto b = random_vector(static_cast<std::size_t>(n) * n, 2);
  std::vector<float> c(static_cast<std::size_t>(n) * n);
  for (auto _ : state) {
    texpand::reference::gemm<float>(false, false, n, n, n, 1.0f, a.data(), n, b.data(), n, 0.0f,
                                    c.data(), n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

// Residual-block convolution: 3x3, reflection padded, channels x size x size.
ConvGeometry resblock_geometry(int size) {
  return ConvGeometry{size, size, 3, 1, 1, Padding::reflect};
}

template <bool Parallel>
void BM_Conv3x3(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  const ConvGeometry g = resblock_geometry(size);
  auto in = random_vector(static_cast<std::size_t>(ch) * size * size, 3);
  auto w = random_vector(static_cast<std::size_t>(ch) * ch * 9, 4);
  std::vector<float> out(static_cast<std::size_t>(ch) * size * size);
  for (auto _ : state) {
    if constexpr (Parallel) {
      texpand::kernels::conv2d_forward<float>(in.data(), ch, g, w.data(), ch, nullptr, out.data());
    } else {
      texpand::reference::conv2d_forward<float>(in.data(), ch, g, w.data(), ch, nullptr, out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * ch * ch * 9.0 * size * size,
                                                benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <bool Parallel>
void BM_Deconv(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  // Input plane size x size, output 2size x 2size.
  const ConvGeometry g{2 * size, 2 * size, 3, 2, 1, Padding::zero};
  auto in = random_vector(static_cast<std::size_t>(2 * ch) * size * size, 5);
  auto w = random_vector(static_cast<std::size_t>(2 * ch) * ch * 9, 6);
  std::vector<float> out(static_cast<std::size_t>(ch) * 4 * size * size);
  for (auto _ : state) {
    if constexpr (Parallel) {
      texpand::kernels::conv_transpose2d_forward<float>(in.data(), 2 * ch, g, w.data(), ch, nullptr,
                                                        out.data());
    } else {
      texpand::reference::conv_transpose2d_forward<float>(in.data(), 2 * ch, g, w.data(), ch,
                                                          nullptr, out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * 2 * ch * ch * 9.0 * size * size,
                                                benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

}  // namespace

BENCHMARK(BM_GemmParallel)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_GemmReference)->Arg(128)->Arg(256);
BENCHMARK(BM_Conv3x3<true>)->Args({64, 16})->Args({32, 32})->Args({256, 16});
BENCHMARK(BM_Conv3x3<false>)->Args({64, 16})->Args({32, 32});
BENCHMARK(BM_Deconv<true>)->Args({32, 32})->Args({16, 64});
BENCHMARK(BM_Deconv<false>)->Args({32, 32});

BENCHMARK_MAIN();

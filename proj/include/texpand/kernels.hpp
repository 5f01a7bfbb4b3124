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

#include <cstddef>

// OpenMP-parallel compute kernels. Every kernel partitions work so that each
// output element is reduced in a fixed order, so results are bit-identical for
// any thread count. Serial reference versions live in texpand/reference/.

namespace texpand::kernels {

enum class Padding { zero, reflect };

// Sliding-window geometry of a 2-D convolution over a single plane.
struct ConvGeometry {
  int in_h = 0;
  int in_w = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  Padding padding = Padding::zero;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
};

// Upper bound on im2col scratch (elements); larger problems are processed in
// bands of output rows.
inline constexpr std::size_t kColumnBudget = std::size_t{1} << 23;

// C = alpha * op(A) * op(B) + beta * C, row-major. With beta == 0, C is not read.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

// Unfolds output rows [row_begin, row_end) of `image` (channels x in_h x in_w)
// into `col` ((channels * kernel^2) x ((row_end - row_begin) * out_w)).
template <typename T>
void im2col(const T* image, int channels, const ConvGeometry& g, int row_begin, int row_end,
            T* col);

// Adjoint of im2col: accumulates `col` back into `image`. Reflected taps are
// folded onto the pixel they were read from.
template <typename T>
void col2im(const T* col, int channels, const ConvGeometry& g, int row_begin, int row_end,
            T* image);

// Single-sample convolution. weight is (cout, cin, k, k); bias may be null.
template <typename T>
void conv2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight, int cout,
                    const T* bias, T* output);
// Overwrites grad_input.
template <typename T>
void conv2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g, const T* weight,
                          int cin, T* grad_input);
// Accumulates into grad_weight and (if non-null) grad_bias.
template <typename T>
void conv2d_backward_weight(const T* input, int cin, const ConvGeometry& g, const T* grad_output,
                            int cout, T* grad_weight, T* grad_bias);

// Transposed convolution. `g` is the geometry of the forward convolution that
// maps the (larger) output plane onto the input plane, so the input plane is
// g.out_h() x g.out_w() and the output plane is g.in_h x g.in_w.
// weight is (cin, cout, k, k).
template <typename T>
void conv_transpose2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight,
                              int cout, const T* bias, T* output);
template <typename T>
void conv_transpose2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g,
                                    const T* weight, int cin, T* grad_input);
template <typename T>
void conv_transpose2d_backward_weight(const T* input, int cin, const ConvGeometry& g,
                                      const T* grad_output, int cout, T* grad_weight,
                                      T* grad_bias);

}  // namespace texpand::kernels

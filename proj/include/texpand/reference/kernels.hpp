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

#include "texpand/kernels.hpp"

// Serial, loop-nest reference implementations of the parallel kernels. These
// follow the textbook definitions directly (no im2col, no blocking) and exist
// to validate texpand::kernels in tests and to baseline the benchmarks.

namespace texpand::reference {

using kernels::ConvGeometry;
using kernels::Padding;

template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

template <typename T>
void conv2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight, int cout,
                    const T* bias, T* output);
template <typename T>
void conv2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g, const T* weight,
                          int cin, T* grad_input);
template <typename T>
void conv2d_backward_weight(const T* input, int cin, const ConvGeometry& g, const T* grad_output,
                            int cout, T* grad_weight, T* grad_bias);

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

}  // namespace texpand::reference

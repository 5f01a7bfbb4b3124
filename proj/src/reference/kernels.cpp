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

#include "texpand/reference/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace texpand::reference {
namespace {

// Maps a coordinate in the unpadded frame (may be negative or past the end)
// to the pixel it reads, or -1 for an implicit zero.
int source_index(int i, int size, Padding mode) {
  if (i >= 0 && i < size) return i;
  if (mode == Padding::zero) return -1;
  if (i < 0) i = -i;
  if (i >= size) i = 2 * (size - 1) - i;
  return (i >= 0 && i < size) ? i : -1;
}

}  // namespace

template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T s = T(0);
      for (int p = 0; p < k; ++p) {
        const T av = trans_a ? a[static_cast<std::size_t>(p) * lda + i] : a[static_cast<std::size_t>(i) * lda + p];
        const T bv = trans_b ? b[static_cast<std::size_t>(j) * ldb + p] : b[static_cast<std::size_t>(p) * ldb + j];
        s += av * bv;
      }
      T& out = c[static_cast<std::size_t>(i) * ldc + j];
      out = beta == T(0) ? alpha * s : alpha * s + beta * out;
    }
  }
}

template <typename T>
void conv2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight, int cout,
                    const T* bias, T* output) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int k = g.kernel;
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T s = bias ? bias[co] : T(0);
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int sy = source_index(oy * g.stride + ky - g.pad, g.in_h, g.padding);
            if (sy < 0) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sx = source_index(ox * g.stride + kx - g.pad, g.in_w, g.padding);
              if (sx < 0) continue;
              s += weight[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] *
                   input[(static_cast<std::size_t>(ci) * g.in_h + sy) * g.in_w + sx];
            }
          }
        }
        output[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = s;
      }
    }
  }
}

template <typename T>
void conv2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g, const T* weight,
                          int cin, T* grad_input) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int k = g.kernel;
  std::fill(grad_input, grad_input + static_cast<std::size_t>(cin) * g.in_h * g.in_w, T(0));
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const T go = grad_output[(static_cast<std::size_t>(co) * oh + oy) * ow + ox];
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int sy = source_index(oy * g.stride + ky - g.pad, g.in_h, g.padding);
            if (sy < 0) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sx = source_index(ox * g.stride + kx - g.pad, g.in_w, g.padding);
              if (sx < 0) continue;
              grad_input[(static_cast<std::size_t>(ci) * g.in_h + sy) * g.in_w + sx] +=
                  go * weight[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const T* input, int cin, const ConvGeometry& g, const T* grad_output,
                            int cout, T* grad_weight, T* grad_bias) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int k = g.kernel;
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const T go = grad_output[(static_cast<std::size_t>(co) * oh + oy) * ow + ox];
        if (grad_bias) grad_bias[co] += go;
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            const int sy = source_index(oy * g.stride + ky - g.pad, g.in_h, g.padding);
            if (sy < 0) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sx = source_index(ox * g.stride + kx - g.pad, g.in_w, g.padding);
              if (sx < 0) continue;
              grad_weight[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] +=
                  go * input[(static_cast<std::size_t>(ci) * g.in_h + sy) * g.in_w + sx];
            }
          }
        }
      }
    }
  }
}

// Scatter form: every input pixel (iy, ix) deposits weight * value onto output
// position (iy * stride - pad + ky, ix * stride - pad + kx).
template <typename T>
void conv_transpose2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight,
                              int cout, const T* bias, T* output) {
  const int ih = g.out_h();
  const int iw = g.out_w();
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  for (int co = 0; co < cout; ++co) {
    std::fill(output + co * out_plane, output + (co + 1) * out_plane, bias ? bias[co] : T(0));
  }
  for (int ci = 0; ci < cin; ++ci) {
    for (int iy = 0; iy < ih; ++iy) {
      for (int ix = 0; ix < iw; ++ix) {
        const T v = input[(static_cast<std::size_t>(ci) * ih + iy) * iw + ix];
        for (int co = 0; co < cout; ++co) {
          for (int ky = 0; ky < k; ++ky) {
            const int oy = source_index(iy * g.stride - g.pad + ky, g.in_h, g.padding);
            if (oy < 0) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ox = source_index(ix * g.stride - g.pad + kx, g.in_w, g.padding);
              if (ox < 0) continue;
              output[co * out_plane + static_cast<std::size_t>(oy) * g.in_w + ox] +=
                  v * weight[((static_cast<std::size_t>(ci) * cout + co) * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_transpose2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g,
                                    const T* weight, int cin, T* grad_input) {
  const int ih = g.out_h();
  const int iw = g.out_w();
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  for (int ci = 0; ci < cin; ++ci) {
    for (int iy = 0; iy < ih; ++iy) {
      for (int ix = 0; ix < iw; ++ix) {
        T s = T(0);
        for (int co = 0; co < cout; ++co) {
          for (int ky = 0; ky < k; ++ky) {
            const int oy = source_index(iy * g.stride - g.pad + ky, g.in_h, g.padding);
            if (oy < 0) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ox = source_index(ix * g.stride - g.pad + kx, g.in_w, g.padding);
              if (ox < 0) continue;
              s += grad_output[co * out_plane + static_cast<std::size_t>(oy) * g.in_w + ox] *
                   weight[((static_cast<std::size_t>(ci) * cout + co) * k + ky) * k + kx];
            }
          }
        }
        grad_input[(static_cast<std::size_t>(ci) * ih + iy) * iw + ix] = s;
      }
    }
  }
}

template <typename T>
void conv_transpose2d_backward_weight(const T* input, int cin, const ConvGeometry& g,
                                      const T* grad_output, int cout, T* grad_weight,
                                      T* grad_bias) {
  const int ih = g.out_h();
  const int iw = g.out_w();
  const int k = g.kernel;
  const std::size_t out_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  if (grad_bias) {
    for (int co = 0; co < cout; ++co) {
      for (std::size_t i = 0; i < out_plane; ++i) grad_bias[co] += grad_output[co * out_plane + i];
    }
  }
  for (int ci = 0; ci < cin; ++ci) {
    for (int iy = 0; iy < ih; ++iy) {
      for (int ix = 0; ix < iw; ++ix) {
        const T v = input[(static_cast<std::size_t>(ci) * ih + iy) * iw + ix];
        for (int co = 0; co < cout; ++co) {
          for (int ky = 0; ky < k; ++ky) {
            const int oy = source_index(iy * g.stride - g.pad + ky, g.in_h, g.padding);
            if (oy < 0) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ox = source_index(ix * g.stride - g.pad + kx, g.in_w, g.padding);
              if (ox < 0) continue;
              grad_weight[((static_cast<std::size_t>(ci) * cout + co) * k + ky) * k + kx] +=
                  v * grad_output[co * out_plane + static_cast<std::size_t>(oy) * g.in_w + ox];
            }
          }
        }
      }
    }
  }
}

#define TEXPAND_INSTANTIATE_REFERENCE(T)                                                       \
  template void gemm<T>(bool, bool, int, int, int, T, const T*, int, const T*, int, T, T*, int); \
  template void conv2d_forward<T>(const T*, int, const ConvGeometry&, const T*, int, const T*,  \
                                  T*);                                                          \
  template void conv2d_backward_data<T>(const T*, int, const ConvGeometry&, const T*, int, T*); \
  template void conv2d_backward_weight<T>(const T*, int, const ConvGeometry&, const T*, int,    \
                                          T*, T*);                                              \
  template void conv_transpose2d_forward<T>(const T*, int, const ConvGeometry&, const T*, int,  \
                                            const T*, T*);                                      \
  template void conv_transpose2d_backward_data<T>(const T*, int, const ConvGeometry&, const T*, \
                                                  int, T*);                                     \
  template void conv_transpose2d_backward_weight<T>(const T*, int, const ConvGeometry&,         \
                                                    const T*, int, T*, T*);

TEXPAND_INSTANTIATE_REFERENCE(float)
TEXPAND_INSTANTIATE_REFERENCE(double)

#undef TEXPAND_INSTANTIATE_REFERENCE

}  // namespace texpand::reference

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

#include "texpand/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "texpand/error.hpp"

namespace texpand::kernels {
namespace {

template <typename T>
struct Tile;
template <>
struct Tile<float> {
  static constexpr int mr = 6;
  static constexpr int nr = 32;
};
template <>
struct Tile<double> {
  static constexpr int mr = 6;
  static constexpr int nr = 16;
};

constexpr int kBlockK = 256;
constexpr int kBlockM = 96;
constexpr int kBlockN = 2048;

template <typename T>
void pack_a(bool trans, const T* a, int lda, int row0, int rows, int col0, int cols, T* dst) {
  constexpr int mr = Tile<T>::mr;
  const int panels = (rows + mr - 1) / mr;
  for (int ip = 0; ip < panels; ++ip) {
    T* out = dst + static_cast<std::size_t>(ip) * mr * cols;
    const int i0 = ip * mr;
    const int valid = std::min(mr, rows - i0);
    for (int p = 0; p < cols; ++p) {
      for (int i = 0; i < mr; ++i) {
        T v = T(0);
        if (i < valid) {
          const int r = row0 + i0 + i;
          const int q = col0 + p;
          v = trans ? a[static_cast<std::size_t>(q) * lda + r] : a[static_cast<std::size_t>(r) * lda + q];
        }
        out[p * mr + i] = v;
      }
    }
  }
}

template <typename T>
void pack_b(bool trans, const T* b, int ldb, int row0, int rows, int col0, int cols, T* dst) {
  constexpr int nr = Tile<T>::nr;
  const int panels = (cols + nr - 1) / nr;
#pragma omp parallel for schedule(static)
  for (int jp = 0; jp < panels; ++jp) {
    T* out = dst + static_cast<std::size_t>(jp) * nr * rows;
    const int j0 = jp * nr;
    const int valid = std::min(nr, cols - j0);
    for (int p = 0; p < rows; ++p) {
      T* o = out + static_cast<std::size_t>(p) * nr;
      const int r = row0 + p;
      if (!trans) {
        const T* src = b + static_cast<std::size_t>(r) * ldb + col0 + j0;
        int j = 0;
        for (; j < valid; ++j) o[j] = src[j];
        for (; j < nr; ++j) o[j] = T(0);
      } else {
        int j = 0;
        for (; j < valid; ++j) o[j] = b[static_cast<std::size_t>(col0 + j0 + j) * ldb + r];
        for (; j < nr; ++j) o[j] = T(0);
      }
    }
  }
}

template <typename T>
inline void micro_kernel(int kc, const T* __restrict ap, const T* __restrict bp,
                         T* __restrict acc) {
  constexpr int mr = Tile<T>::mr;
  constexpr int nr = Tile<T>::nr;
  T c[mr][nr] = {};
  for (int p = 0; p < kc; ++p) {
    const T* b = bp + static_cast<std::size_t>(p) * nr;
    const T* a = ap + static_cast<std::size_t>(p) * mr;
    for (int i = 0; i < mr; ++i) {
      const T av = a[i];
#pragma omp simd
      for (int j = 0; j < nr; ++j) c[i][j] += av * b[j];
    }
  }
  for (int i = 0; i < mr; ++i) {
    for (int j = 0; j < nr; ++j) acc[i * nr + j] = c[i][j];
  }
}

// Reflection / zero-padding lookup: padded coordinate -> source index or -1.
std::vector<int> padding_map(int size, int pad, int span, Padding mode) {
  std::vector<int> map(static_cast<std::size_t>(span));
  for (int p = 0; p < span; ++p) {
    int i = p - pad;
    if (mode == Padding::reflect) {
      if (i < 0) i = -i;
      if (i >= size) i = 2 * (size - 1) - i;
      map[p] = (i >= 0 && i < size) ? i : -1;
    } else {
      map[p] = (i >= 0 && i < size) ? i : -1;
    }
  }
  return map;
}

int padded_span(int in, int pad, int kernel, int stride, int out) {
  return std::max(in + 2 * pad, (out - 1) * stride + kernel);
}

int rows_per_band(int col_rows, int out_w, int out_h) {
  const std::size_t per_row = static_cast<std::size_t>(col_rows) * std::max(out_w, 1);
  const std::size_t rows = std::max<std::size_t>(1, kColumnBudget / std::max<std::size_t>(per_row, 1));
  return static_cast<int>(std::min<std::size_t>(rows, static_cast<std::size_t>(out_h)));
}

void check_geometry(const ConvGeometry& g) {
  if (g.kernel < 1 || g.stride < 1 || g.pad < 0 || g.in_h < 1 || g.in_w < 1) {
    fail("precondition", "invalid convolution geometry");
  }
  if (g.padding == Padding::reflect && (g.pad >= g.in_h || g.pad >= g.in_w)) {
    fail("precondition", "reflection padding " + std::to_string(g.pad) +
                             " requires planes larger than the pad");
  }
  if (g.out_h() < 1 || g.out_w() < 1) {
    fail("precondition", "convolution input " + std::to_string(g.in_h) + "x" +
                             std::to_string(g.in_w) + " is smaller than the kernel window");
  }
}

template <typename T>
void add_bias(T* out, int channels, std::size_t plane, const T* bias) {
  if (bias == nullptr) return;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    T* p = out + static_cast<std::size_t>(c) * plane;
    const T b = bias[c];
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

template <typename T>
void accumulate_bias_grad(const T* grad, int channels, std::size_t plane, T* grad_bias) {
  if (grad_bias == nullptr) return;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T* p = grad + static_cast<std::size_t>(c) * plane;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    grad_bias[c] += static_cast<T>(s);
  }
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel == 1 && g.stride == 1 && g.pad == 0;
}

}  // namespace

template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
  constexpr int mr = Tile<T>::mr;
  constexpr int nr = Tile<T>::nr;
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    for (int i = 0; i < m; ++i) {
      T* row = c + static_cast<std::size_t>(i) * ldc;
      for (int j = 0; j < n; ++j) row[j] = beta == T(0) ? T(0) : beta * row[j];
    }
    return;
  }

  std::vector<T> bpack(static_cast<std::size_t>(kBlockK) * (kBlockN + nr));
  std::vector<T> apack(static_cast<std::size_t>(kBlockK) * (kBlockM + mr));

  for (int jc = 0; jc < n; jc += kBlockN) {
    const int nc = std::min(kBlockN, n - jc);
    const int npanels = (nc + nr - 1) / nr;
    for (int pc = 0; pc < k; pc += kBlockK) {
      const int kc = std::min(kBlockK, k - pc);
      const T beta_eff = pc == 0 ? beta : T(1);
      pack_b(trans_b, b, ldb, pc, kc, jc, nc, bpack.data());
      for (int ic = 0; ic < m; ic += kBlockM) {
        const int mcur = std::min(kBlockM, m - ic);
        const int mpanels = (mcur + mr - 1) / mr;
        pack_a(trans_a, a, lda, ic, mcur, pc, kc, apack.data());
        const int tiles = mpanels * npanels;
#pragma omp parallel for schedule(static)
        for (int t = 0; t < tiles; ++t) {
          const int ip = t / npanels;
          const int jp = t % npanels;
          alignas(64) T acc[mr * nr];
          micro_kernel<T>(kc, apack.data() + static_cast<std::size_t>(ip) * mr * kc,
                          bpack.data() + static_cast<std::size_t>(jp) * nr * kc, acc);
          const int i0 = ic + ip * mr;
          const int j0 = jc + jp * nr;
          const int im = std::min(mr, m - i0);
          const int jn = std::min(nr, n - j0);
          for (int i = 0; i < im; ++i) {
            T* crow = c + static_cast<std::size_t>(i0 + i) * ldc + j0;
            const T* arow = acc + i * nr;
            if (beta_eff == T(0)) {
              for (int j = 0; j < jn; ++j) crow[j] = alpha * arow[j];
            } else if (beta_eff == T(1)) {
              for (int j = 0; j < jn; ++j) crow[j] += alpha * arow[j];
            } else {
              for (int j = 0; j < jn; ++j) crow[j] = alpha * arow[j] + beta_eff * crow[j];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void im2col(const T* image, int channels, const ConvGeometry& g, int row_begin, int row_end,
            T* col) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int kk = g.kernel * g.kernel;
  const std::vector<int> rmap =
      padding_map(g.in_h, g.pad, padded_span(g.in_h, g.pad, g.kernel, g.stride, oh), g.padding);
  const std::vector<int> cmap =
      padding_map(g.in_w, g.pad, padded_span(g.in_w, g.pad, g.kernel, g.stride, ow), g.padding);
  const std::size_t ncols = static_cast<std::size_t>(row_end - row_begin) * ow;
  const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const int rows = channels * kk;

#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int ch = r / kk;
    const int ky = (r / g.kernel) % g.kernel;
    const int kx = r % g.kernel;
    T* dst = col + static_cast<std::size_t>(r) * ncols;
    const T* src_plane = image + static_cast<std::size_t>(ch) * plane;
    for (int oy = row_begin; oy < row_end; ++oy) {
      T* out = dst + static_cast<std::size_t>(oy - row_begin) * ow;
      const int sy = rmap[oy * g.stride + ky];
      if (sy < 0) {
        std::fill(out, out + ow, T(0));
        continue;
      }
      const T* src = src_plane + static_cast<std::size_t>(sy) * g.in_w;
      for (int ox = 0; ox < ow; ++ox) {
        const int sx = cmap[ox * g.stride + kx];
        out[ox] = sx < 0 ? T(0) : src[sx];
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, const ConvGeometry& g, int row_begin, int row_end,
            T* image) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int kk = g.kernel * g.kernel;
  const std::vector<int> rmap =
      padding_map(g.in_h, g.pad, padded_span(g.in_h, g.pad, g.kernel, g.stride, oh), g.padding);
  const std::vector<int> cmap =
      padding_map(g.in_w, g.pad, padded_span(g.in_w, g.pad, g.kernel, g.stride, ow), g.padding);
  const std::size_t ncols = static_cast<std::size_t>(row_end - row_begin) * ow;
  const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;

  // One channel per thread keeps the accumulation order fixed.
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < channels; ++ch) {
    T* dst_plane = image + static_cast<std::size_t>(ch) * plane;
    for (int q = 0; q < kk; ++q) {
      const int ky = q / g.kernel;
      const int kx = q % g.kernel;
      const T* src = col + static_cast<std::size_t>(ch * kk + q) * ncols;
      for (int oy = row_begin; oy < row_end; ++oy) {
        const int sy = rmap[oy * g.stride + ky];
        if (sy < 0) continue;
        T* drow = dst_plane + static_cast<std::size_t>(sy) * g.in_w;
        const T* srow = src + static_cast<std::size_t>(oy - row_begin) * ow;
        for (int ox = 0; ox < ow; ++ox) {
          const int sx = cmap[ox * g.stride + kx];
          if (sx >= 0) drow[sx] += srow[ox];
        }
      }
    }
  }
}

template <typename T>
void conv2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight, int cout,
                    const T* bias, T* output) {
  check_geometry(g);
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int kcols = cin * g.kernel * g.kernel;
  const int plane = oh * ow;
  if (is_pointwise(g)) {
    gemm<T>(false, false, cout, plane, cin, T(1), weight, kcols, input, plane, T(0), output, plane);
  } else {
    const int band = rows_per_band(kcols, ow, oh);
    std::vector<T> col(static_cast<std::size_t>(kcols) * band * ow);
    for (int r0 = 0; r0 < oh; r0 += band) {
      const int r1 = std::min(oh, r0 + band);
      const int nb = (r1 - r0) * ow;
      im2col(input, cin, g, r0, r1, col.data());
      gemm<T>(false, false, cout, nb, kcols, T(1), weight, kcols, col.data(), nb, T(0),
              output + static_cast<std::size_t>(r0) * ow, plane);
    }
  }
  add_bias(output, cout, static_cast<std::size_t>(plane), bias);
}

template <typename T>
void conv2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g, const T* weight,
                          int cin, T* grad_input) {
  check_geometry(g);
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int kcols = cin * g.kernel * g.kernel;
  const int plane = oh * ow;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  if (is_pointwise(g)) {
    gemm<T>(true, false, cin, plane, cout, T(1), weight, kcols, grad_output, plane, T(0),
            grad_input, plane);
    return;
  }
  std::fill(grad_input, grad_input + in_plane * cin, T(0));
  const int band = rows_per_band(kcols, ow, oh);
  std::vector<T> col(static_cast<std::size_t>(kcols) * band * ow);
  for (int r0 = 0; r0 < oh; r0 += band) {
    const int r1 = std::min(oh, r0 + band);
    const int nb = (r1 - r0) * ow;
    gemm<T>(true, false, kcols, nb, cout, T(1), weight, kcols,
            grad_output + static_cast<std::size_t>(r0) * ow, plane, T(0), col.data(), nb);
    col2im(col.data(), cin, g, r0, r1, grad_input);
  }
}

template <typename T>
void conv2d_backward_weight(const T* input, int cin, const ConvGeometry& g, const T* grad_output,
                            int cout, T* grad_weight, T* grad_bias) {
  check_geometry(g);
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int kcols = cin * g.kernel * g.kernel;
  const int plane = oh * ow;
  if (is_pointwise(g)) {
    gemm<T>(false, true, cout, cin, plane, T(1), grad_output, plane, input, plane, T(1),
            grad_weight, kcols);
  } else {
    const int band = rows_per_band(kcols, ow, oh);
    std::vector<T> col(static_cast<std::size_t>(kcols) * band * ow);
    for (int r0 = 0; r0 < oh; r0 += band) {
      const int r1 = std::min(oh, r0 + band);
      const int nb = (r1 - r0) * ow;
      im2col(input, cin, g, r0, r1, col.data());
      gemm<T>(false, true, cout, kcols, nb, T(1), grad_output + static_cast<std::size_t>(r0) * ow,
              plane, col.data(), nb, T(1), grad_weight, kcols);
    }
  }
  accumulate_bias_grad(grad_output, cout, static_cast<std::size_t>(plane), grad_bias);
}

template <typename T>
void conv_transpose2d_forward(const T* input, int cin, const ConvGeometry& g, const T* weight,
                              int cout, const T* bias, T* output) {
  check_geometry(g);
  const int ih = g.out_h();
  const int iw = g.out_w();
  const int kcols = cout * g.kernel * g.kernel;
  const int plane = ih * iw;
  const std::size_t out_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  std::fill(output, output + out_plane * cout, T(0));
  const int band = rows_per_band(kcols, iw, ih);
  std::vector<T> col(static_cast<std::size_t>(kcols) * band * iw);
  for (int r0 = 0; r0 < ih; r0 += band) {
    const int r1 = std::min(ih, r0 + band);
    const int nb = (r1 - r0) * iw;
    gemm<T>(true, false, kcols, nb, cin, T(1), weight, kcols,
            input + static_cast<std::size_t>(r0) * iw, plane, T(0), col.data(), nb);
    col2im(col.data(), cout, g, r0, r1, output);
  }
  add_bias(output, cout, out_plane, bias);
}

template <typename T>
void conv_transpose2d_backward_data(const T* grad_output, int cout, const ConvGeometry& g,
                                    const T* weight, int cin, T* grad_input) {
  check_geometry(g);
  const int ih = g.out_h();
  const int iw = g.out_w();
  const int kcols = cout * g.kernel * g.kernel;
  const int plane = ih * iw;
  const int band = rows_per_band(kcols, iw, ih);
  std::vector<T> col(static_cast<std::size_t>(kcols) * band * iw);
  for (int r0 = 0; r0 < ih; r0 += band) {
    const int r1 = std::min(ih, r0 + band);
    const int nb = (r1 - r0) * iw;
    im2col(grad_output, cout, g, r0, r1, col.data());
    gemm<T>(false, false, cin, nb, kcols, T(1), weight, kcols, col.data(), nb, T(0),
            grad_input + static_cast<std::size_t>(r0) * iw, plane);
  }
}

template <typename T>
void conv_transpose2d_backward_weight(const T* input, int cin, const ConvGeometry& g,
                                      const T* grad_output, int cout, T* grad_weight,
                                      T* grad_bias) {
  check_geometry(g);
  const int ih = g.out_h();
  const int iw = g.out_w();
  const int kcols = cout * g.kernel * g.kernel;
  const int plane = ih * iw;
  const int band = rows_per_band(kcols, iw, ih);
  std::vector<T> col(static_cast<std::size_t>(kcols) * band * iw);
  for (int r0 = 0; r0 < ih; r0 += band) {
    const int r1 = std::min(ih, r0 + band);
    const int nb = (r1 - r0) * iw;
    im2col(grad_output, cout, g, r0, r1, col.data());
    gemm<T>(false, true, cin, kcols, nb, T(1), input + static_cast<std::size_t>(r0) * iw, plane,
            col.data(), nb, T(1), grad_weight, kcols);
  }
  accumulate_bias_grad(grad_output, cout, static_cast<std::size_t>(g.in_h) * g.in_w, grad_bias);
}

#define TEXPAND_INSTANTIATE_KERNELS(T)                                                         \
  template void gemm<T>(bool, bool, int, int, int, T, const T*, int, const T*, int, T, T*, int); \
  template void im2col<T>(const T*, int, const ConvGeometry&, int, int, T*);                    \
  template void col2im<T>(const T*, int, const ConvGeometry&, int, int, T*);                    \
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

TEXPAND_INSTANTIATE_KERNELS(float)
TEXPAND_INSTANTIATE_KERNELS(double)

#undef TEXPAND_INSTANTIATE_KERNELS

}  // namespace texpand::kernels

// Copyright 2026 The synthaug Authors. All Rights Reserved.
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

#include <algorithm>
#include <vector>

#include "synthaug/numerics/kernels.hpp"

namespace synthaug::kernels::parallel {

namespace {

// cols[(ci*kh + ky)*kw + kx][oy*ow + ox] = padded input sample
template <class T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int p_count = oh * ow;
  for (int ci = 0; ci < g.in_channels; ++ci) {
    const T* plane = x + static_cast<std::int64_t>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx) {
        T* row = cols + static_cast<std::int64_t>((ci * g.kernel_h + ky) * g.kernel_w + kx) * p_count;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* out = row + oy * ow;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(out, out + ow, T(0));
            continue;
          }
          const T* src = plane + iy * g.in_w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            out[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Transposed layout: rows[p][k]
template <class T>
void im2row(const ConvGeometry& g, const T* x, T* rows) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int k_count = g.in_channels * g.kernel_h * g.kernel_w;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* out = rows + static_cast<std::int64_t>(oy * ow + ox) * k_count;
      int k = 0;
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const T* plane = x + static_cast<std::int64_t>(ci) * g.in_h * g.in_w;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int kx = 0; kx < g.kernel_w; ++kx, ++k) {
            const int ix = ox * g.stride - g.pad + kx;
            out[k] = (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w) ? plane[iy * g.in_w + ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const ConvGeometry& g, const T* cols, T* x) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  const int p_count = oh * ow;
  for (int ci = 0; ci < g.in_channels; ++ci) {
    T* plane = x + static_cast<std::int64_t>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = cols + static_cast<std::int64_t>((ci * g.kernel_h + ky) * g.kernel_w + kx) * p_count;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          T* dst = plane + iy * g.in_w;
          const T* src = row + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// c[m x n] = a[m x k] * b[k x n], single thread. Each c element accumulates
// its k products in ascending order; four products are folded per pass so a
// row of c is loaded and stored once per four steps of k.
template <class T>
void gemm_rows(int row_begin, int row_end, int n, int k, const T* a, const T* b, T* c) {
  for (int i = row_begin; i < row_end; ++i) {
    T* ci = c + static_cast<std::int64_t>(i) * n;
    std::fill(ci, ci + n, T(0));
    const T* ai = a + static_cast<std::int64_t>(i) * k;
    int p = 0;
    for (; p + 4 <= k; p += 4) {
      const T a0 = ai[p], a1 = ai[p + 1], a2 = ai[p + 2], a3 = ai[p + 3];
      const T* b0 = b + static_cast<std::int64_t>(p) * n;
      const T* b1 = b0 + n;
      const T* b2 = b1 + n;
      const T* b3 = b2 + n;
#pragma omp simd
      for (int j = 0; j < n; ++j) {
        T acc = ci[j];
        acc += a0 * b0[j];
        acc += a1 * b1[j];
        acc += a2 * b2[j];
        acc += a3 * b3[j];
        ci[j] = acc;
      }
    }
    for (; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + static_cast<std::int64_t>(p) * n;
#pragma omp simd
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace

template <class T>
void gemm(int m, int n, int k, const T* a, const T* b, T* c) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 32768)
  for (int i = 0; i < m; ++i) gemm_rows(i, i + 1, n, k, a, b, c);
}

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, T* y) {
  const int p_count = g.out_h() * g.out_w();
  const int k_count = g.in_channels * g.kernel_h * g.kernel_w;
  const std::int64_t in_stride = static_cast<std::int64_t>(g.in_channels) * g.in_h * g.in_w;
  const std::int64_t out_stride = static_cast<std::int64_t>(g.out_channels) * p_count;
#pragma omp parallel
  {
    std::vector<T> cols(static_cast<std::size_t>(k_count) * p_count);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      im2col(g, x + n * in_stride, cols.data());
      gemm_rows(0, g.out_channels, p_count, k_count, w, cols.data(), y + n * out_stride);
    }
  }
}

template <class T>
void conv2d_backward_input(const ConvGeometry& g, const T* gy, const T* w, T* gx) {
  const int p_count = g.out_h() * g.out_w();
  const int k_count = g.in_channels * g.kernel_h * g.kernel_w;
  const std::int64_t in_stride = static_cast<std::int64_t>(g.in_channels) * g.in_h * g.in_w;
  const std::int64_t out_stride = static_cast<std::int64_t>(g.out_channels) * p_count;
  std::vector<T> wt(static_cast<std::size_t>(k_count) * g.out_channels);
  for (int co = 0; co < g.out_channels; ++co) {
    for (int k = 0; k < k_count; ++k) wt[static_cast<std::size_t>(k) * g.out_channels + co] = w[co * k_count + k];
  }
#pragma omp parallel
  {
    std::vector<T> cols(static_cast<std::size_t>(k_count) * p_count);
#pragma omp for schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      gemm_rows(0, k_count, p_count, g.out_channels, wt.data(), gy + n * out_stride, cols.data());
      col2im_add(g, cols.data(), gx + n * in_stride);
    }
  }
}

template <class T>
void conv2d_backward_weight(const ConvGeometry& g, const T* x, const T* gy, T* gw) {
  const int p_count = g.out_h() * g.out_w();
  const int k_count = g.in_channels * g.kernel_h * g.kernel_w;
  const std::int64_t in_stride = static_cast<std::int64_t>(g.in_channels) * g.in_h * g.in_w;
  const std::int64_t out_stride = static_cast<std::int64_t>(g.out_channels) * p_count;
  std::vector<T> rows(static_cast<std::size_t>(p_count) * k_count);
  // Samples are folded in order so every weight sees the same summation
  // sequence regardless of the thread count.
  for (int n = 0; n < g.batch; ++n) {
    im2row(g, x + n * in_stride, rows.data());
    const T* gyn = gy + n * out_stride;
#pragma omp parallel for schedule(static) if (static_cast<long>(g.out_channels) * p_count * k_count > 65536)
    for (int co = 0; co < g.out_channels; ++co) {
      T* dst = gw + static_cast<std::int64_t>(co) * k_count;
      const T* grow = gyn + static_cast<std::int64_t>(co) * p_count;
      for (int p = 0; p < p_count; ++p) {
        const T a = grow[p];
        if (a == T(0)) continue;
        const T* src = rows.data() + static_cast<std::int64_t>(p) * k_count;
#pragma omp simd
        for (int k = 0; k < k_count; ++k) dst[k] += a * src[k];
      }
    }
  }
}

template <class T>
void axpby(std::int64_t n, T alpha, const T* x, T beta, const T* y, T* out) {
#pragma omp parallel for simd schedule(static) if (n > (1 << 16))
  for (std::int64_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

template <class T>
void multiply(std::int64_t n, const T* x, const T* y, T* out) {
#pragma omp parallel for simd schedule(static) if (n > (1 << 16))
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

#define SYNTHAUG_INSTANTIATE(T)                                                                   \
  template void gemm<T>(int, int, int, const T*, const T*, T*);                                   \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, T*);                   \
  template void conv2d_backward_input<T>(const ConvGeometry&, const T*, const T*, T*);            \
  template void conv2d_backward_weight<T>(const ConvGeometry&, const T*, const T*, T*);           \
  template void axpby<T>(std::int64_t, T, const T*, T, const T*, T*);                             \
  template void multiply<T>(std::int64_t, const T*, const T*, T*);

SYNTHAUG_INSTANTIATE(float)
SYNTHAUG_INSTANTIATE(double)
#undef SYNTHAUG_INSTANTIATE

}  // namespace synthaug::kernels::parallel

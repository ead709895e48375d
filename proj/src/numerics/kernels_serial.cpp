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

#include "synthaug/numerics/kernels.hpp"

namespace synthaug::kernels::serial {

template <class T>
void gemm(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = 0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, T* y) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T acc = 0;
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ky = 0; ky < g.kernel_h; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += x[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix] *
                       w[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
          }
          y[((n * g.out_channels + co) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

template <class T>
void conv2d_backward_input(const ConvGeometry& g, const T* gy, const T* w, T* gx) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const T go = gy[((n * g.out_channels + co) * oh + oy) * ow + ox];
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ky = 0; ky < g.kernel_h; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                gx[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix] +=
                    go * w[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_backward_weight(const ConvGeometry& g, const T* x, const T* gy, T* gw) {
  const int oh = g.out_h();
  const int ow = g.out_w();
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const T go = gy[((n * g.out_channels + co) * oh + oy) * ow + ox];
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ky = 0; ky < g.kernel_h; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                gw[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx] +=
                    go * x[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
        }
      }
    }
  }
}

#define SYNTHAUG_INSTANTIATE(T)                                                                   \
  template void gemm<T>(int, int, int, const T*, const T*, T*);                                   \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, T*);                   \
  template void conv2d_backward_input<T>(const ConvGeometry&, const T*, const T*, T*);            \
  template void conv2d_backward_weight<T>(const ConvGeometry&, const T*, const T*, T*);

SYNTHAUG_INSTANTIATE(float)
SYNTHAUG_INSTANTIATE(double)
#undef SYNTHAUG_INSTANTIATE

}  // namespace synthaug::kernels::serial

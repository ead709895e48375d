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

#include "synthaug/numerics/ops.hpp"

#include <algorithm>
#include <cmath>

#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/kernels.hpp"

namespace synthaug::nn {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  if (a.dtype() != b.dtype()) throw DimensionError(std::string(op) + ": dtype mismatch");
}

void require_rank(const Tensor& t, int rank, const char* op) {
  if (t.ndim() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

// out[i] = f(x[i])
template <class F>
Tensor map_values(const Tensor& x, F f) {
  Tensor out = Tensor::empty(x.shape(), x.dtype());
  dispatch(x.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = x.values<T>();
    auto o = out.mutable_values<T>();
    const std::int64_t n = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static) if (n > (1 << 16))
    for (std::int64_t i = 0; i < n; ++i) o[i] = static_cast<T>(f(static_cast<double>(in[i])));
  });
  return out;
}

// Elementwise op whose derivative is held constant: backward is g * deriv.
template <class F, class D>
Tensor pointwise(const Tensor& x, std::string_view name, F value, D derivative) {
  Tensor out = map_values(x, value);
  if (GradMode::is_enabled() && x.requires_grad()) {
    Tensor d = map_values(x, derivative);
    record(out, name, {x}, [d](const Tensor& g) { return std::vector<Tensor>{mul(g, d)}; });
  }
  return out;
}

int batch_of(const Tensor& t) {
  if (t.ndim() < 1) throw DimensionError("expected a batch axis, got " + shape_str(t.shape()));
  return t.dim(0);
}

}  // namespace

// ---------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out = Tensor::empty(a.shape(), a.dtype());
  dispatch(a.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::axpby<T>(a.numel(), T(1), a.values<T>().data(), T(1), b.values<T>().data(),
                                out.mutable_values<T>().data());
  });
  return record(out, "add", {a, b}, [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  Tensor out = Tensor::empty(a.shape(), a.dtype());
  dispatch(a.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::axpby<T>(a.numel(), T(1), a.values<T>().data(), T(-1), b.values<T>().data(),
                                out.mutable_values<T>().data());
  });
  return record(out, "sub", {a, b}, [](const Tensor& g) { return std::vector<Tensor>{g, neg(g)}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  Tensor out = Tensor::empty(a.shape(), a.dtype());
  dispatch(a.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::multiply<T>(a.numel(), a.values<T>().data(), b.values<T>().data(),
                                   out.mutable_values<T>().data());
  });
  return record(out, "mul", {a, b}, [a, b](const Tensor& g) {
    return std::vector<Tensor>{a.requires_grad() ? mul(g, b) : Tensor{}, b.requires_grad() ? mul(g, a) : Tensor{}};
  });
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = map_values(a, [factor](double v) { return v * factor; });
  return record(out, "scale", {a}, [factor](const Tensor& g) { return std::vector<Tensor>{scale(g, factor)}; });
}

Tensor add_scalar(const Tensor& a, double value) {
  Tensor out = map_values(a, [value](double v) { return v + value; });
  return record(out, "add_scalar", {a}, [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor lerp(const Tensor& a, const Tensor& b, double alpha) {
  return add(scale(a, 1.0 - alpha), scale(b, alpha));
}

Tensor leaky_relu(const Tensor& t, double slope) {
  return pointwise(
      t, "leaky_relu", [slope](double v) { return v >= 0.0 ? v : v * slope; },
      [slope](double v) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& t) { return leaky_relu(t, 0.0); }

Tensor tanh_act(const Tensor& t) {
  return pointwise(
      t, "tanh", [](double v) { return std::tanh(v); },
      [](double v) {
        const double y = std::tanh(v);
        return 1.0 - y * y;
      });
}

Tensor sigmoid(const Tensor& t) {
  auto sig = [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); };
  return pointwise(t, "sigmoid", sig, [sig](double v) {
    const double s = sig(v);
    return s * (1.0 - s);
  });
}

Tensor log_act(const Tensor& t) {
  return pointwise(
      t, "log", [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Tensor safe_reciprocal(const Tensor& t) {
  Tensor out = map_values(t, [](double v) { return v != 0.0 ? 1.0 / v : 0.0; });
  return record(out, "safe_reciprocal", {t}, [t](const Tensor& g) {
    const Tensor r = safe_reciprocal(t);
    return std::vector<Tensor>{neg(mul(g, mul(r, r)))};
  });
}

// Backward is built from sqrt_act and safe_reciprocal, so higher derivatives
// are exact for v > 0. At v == 0 every derivative is taken as 0.
Tensor sqrt_act(const Tensor& t) {
  Tensor out = map_values(t, [](double v) { return std::sqrt(v); });
  return record(out, "sqrt", {t}, [t](const Tensor& g) {
    return std::vector<Tensor>{mul(g, scale(safe_reciprocal(sqrt_act(t)), 0.5))};
  });
}

Tensor rsqrt(const Tensor& t) {
  return pointwise(
      t, "rsqrt", [](double v) { return 1.0 / std::sqrt(v); },
      [](double v) { return -0.5 / (v * std::sqrt(v)); });
}

Tensor abs_act(const Tensor& t) {
  return pointwise(
      t, "abs", [](double v) { return std::abs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  return pointwise(
      t, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor smooth_l1(const Tensor& t) {
  return pointwise(
      t, "smooth_l1", [](double v) { return std::abs(v) < 1.0 ? 0.5 * v * v : std::abs(v) - 0.5; },
      [](double v) { return std::clamp(v, -1.0, 1.0); });
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& targets) {
  require_same(logits, targets, "bce_with_logits");
  Tensor out = Tensor::empty(logits.shape(), logits.dtype());
  Tensor d = Tensor::empty(logits.shape(), logits.dtype());
  for (std::int64_t i = 0; i < logits.numel(); ++i) {
    const double z = logits.at(i);
    const double y = targets.at(i);
    out.set(i, std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
    const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    d.set(i, s - y);
  }
  return record(out, "bce_with_logits", {logits}, [d](const Tensor& g) { return std::vector<Tensor>{mul(g, d)}; });
}

// ----------------------------------------------------------------- reductions

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    for (T v : t.values<T>()) acc += static_cast<double>(v);
  });
  Tensor out = Tensor::scalar(acc, t.dtype());
  const Shape shape = t.shape();
  return record(out, "sum", {t}, [shape](const Tensor& g) { return std::vector<Tensor>{expand_scalar(g, shape)}; });
}

Tensor mean(const Tensor& t) { return scale(sum(t), 1.0 / static_cast<double>(t.numel())); }

Tensor expand_scalar(const Tensor& s, const Shape& shape) {
  if (s.numel() != 1) throw DimensionError("expand_scalar needs one element, got " + shape_str(s.shape()));
  Tensor out = Tensor::full(shape, s.at(0), s.dtype());
  const Shape src = s.shape();
  return record(out, "expand_scalar", {s}, [src](const Tensor& g) { return std::vector<Tensor>{reshape(sum(g), src)}; });
}

Tensor sum_per_sample(const Tensor& t) {
  const int n = batch_of(t);
  const std::int64_t per = t.numel() / n;
  Tensor out = Tensor::zeros({n}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < per; ++j) acc += in[i * per + j];
      o[i] = static_cast<T>(acc);
    }
  });
  const Shape shape = t.shape();
  return record(out, "sum_per_sample", {t},
                [shape](const Tensor& g) { return std::vector<Tensor>{expand_per_sample(g, shape)}; });
}

Tensor expand_per_sample(const Tensor& v, const Shape& shape) {
  require_rank(v, 1, "expand_per_sample");
  if (shape.empty() || shape[0] != v.dim(0)) {
    throw DimensionError("expand_per_sample: " + shape_str(v.shape()) + " vs " + shape_str(shape));
  }
  Tensor out = Tensor::empty(shape, v.dtype());
  const std::int64_t per = out.numel() / v.dim(0);
  dispatch(v.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = v.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < v.dim(0); ++i) std::fill(o.begin() + i * per, o.begin() + (i + 1) * per, in[i]);
  });
  return record(out, "expand_per_sample", {v}, [](const Tensor& g) { return std::vector<Tensor>{sum_per_sample(g)}; });
}

Tensor sum_to_channels(const Tensor& t) {
  if (t.ndim() < 2) throw DimensionError("sum_to_channels needs (N, C, ...), got " + shape_str(t.shape()));
  const int n = t.dim(0);
  const int c = t.dim(1);
  const std::int64_t inner = t.numel() / (static_cast<std::int64_t>(n) * c);
  Tensor out = Tensor::zeros({c}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const T* p = in.data() + (static_cast<std::int64_t>(i) * c + ch) * inner;
        for (std::int64_t j = 0; j < inner; ++j) acc += p[j];
      }
      o[ch] = static_cast<T>(acc);
    }
  });
  const Shape shape = t.shape();
  return record(out, "sum_to_channels", {t},
                [shape](const Tensor& g) { return std::vector<Tensor>{broadcast_channels(g, shape)}; });
}

Tensor broadcast_channels(const Tensor& b, const Shape& shape) {
  require_rank(b, 1, "broadcast_channels");
  if (shape.size() < 2 || shape[1] != b.dim(0)) {
    throw DimensionError("broadcast_channels: " + shape_str(b.shape()) + " onto " + shape_str(shape));
  }
  Tensor out = Tensor::empty(shape, b.dtype());
  const int n = shape[0];
  const int c = shape[1];
  const std::int64_t inner = out.numel() / (static_cast<std::int64_t>(n) * c);
  dispatch(b.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = b.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        auto first = o.begin() + (static_cast<std::int64_t>(i) * c + ch) * inner;
        std::fill(first, first + inner, in[ch]);
      }
    }
  });
  return record(out, "broadcast_channels", {b}, [](const Tensor& g) { return std::vector<Tensor>{sum_to_channels(g)}; });
}

Tensor channel_sum(const Tensor& t) {
  require_rank(t, 4, "channel_sum");
  const int n = t.dim(0), c = t.dim(1), hw = t.dim(2) * t.dim(3);
  Tensor out = Tensor::zeros({n, 1, t.dim(2), t.dim(3)}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const T* p = in.data() + (static_cast<std::int64_t>(i) * c + ch) * hw;
        T* q = o.data() + static_cast<std::int64_t>(i) * hw;
        for (int j = 0; j < hw; ++j) q[j] += p[j];
      }
    }
  });
  return record(out, "channel_sum", {t}, [c](const Tensor& g) { return std::vector<Tensor>{channel_broadcast(g, c)}; });
}

Tensor channel_broadcast(const Tensor& t, int channels) {
  require_rank(t, 4, "channel_broadcast");
  if (t.dim(1) != 1) throw DimensionError("channel_broadcast needs a single channel, got " + shape_str(t.shape()));
  const int n = t.dim(0), hw = t.dim(2) * t.dim(3);
  Tensor out = Tensor::empty({n, channels, t.dim(2), t.dim(3)}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < channels; ++ch) {
        std::copy_n(in.data() + static_cast<std::int64_t>(i) * hw, hw,
                    o.data() + (static_cast<std::int64_t>(i) * channels + ch) * hw);
      }
    }
  });
  return record(out, "channel_broadcast", {t}, [](const Tensor& g) { return std::vector<Tensor>{channel_sum(g)}; });
}

// ---------------------------------------------------------------------- shape

Tensor reshape(const Tensor& t, const Shape& shape) {
  Tensor out = view_as(t, shape);
  const Shape src = t.shape();
  return record(out, "reshape", {t}, [src](const Tensor& g) { return std::vector<Tensor>{reshape(g, src)}; });
}

Tensor flatten(const Tensor& t) {
  const int n = batch_of(t);
  return reshape(t, {n, static_cast<int>(t.numel() / n)});
}

Tensor transpose2d(const Tensor& t) {
  require_rank(t, 2, "transpose2d");
  const int r = t.dim(0), c = t.dim(1);
  Tensor out = Tensor::empty({c, r}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) o[j * r + i] = in[i * c + j];
  });
  return record(out, "transpose2d", {t}, [](const Tensor& g) { return std::vector<Tensor>{transpose2d(g)}; });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_channels of nothing");
  const Tensor& first = parts.front();
  int total = 0;
  for (const auto& p : parts) {
    if (p.ndim() < 2 || p.dim(0) != first.dim(0) || p.dtype() != first.dtype() ||
        std::vector<int>(p.shape().begin() + 2, p.shape().end()) !=
            std::vector<int>(first.shape().begin() + 2, first.shape().end())) {
      throw DimensionError("concat_channels: incompatible " + shape_str(first.shape()) + " and " + shape_str(p.shape()));
    }
    total += p.dim(1);
  }
  Shape shape = first.shape();
  shape[1] = total;
  Tensor out = Tensor::empty(shape, first.dtype());
  const int n = shape[0];
  const std::int64_t inner = first.numel() / (static_cast<std::int64_t>(n) * first.dim(1));
  std::vector<int> offsets;
  dispatch(first.dtype(), [&]<class T>(std::type_identity<T>) {
    auto o = out.mutable_values<T>();
    int offset = 0;
    for (const auto& p : parts) {
      offsets.push_back(offset);
      auto in = p.values<T>();
      const int c = p.dim(1);
      for (int i = 0; i < n; ++i) {
        std::copy_n(in.data() + static_cast<std::int64_t>(i) * c * inner, c * inner,
                    o.data() + (static_cast<std::int64_t>(i) * total + offset) * inner);
      }
      offset += c;
    }
  });
  std::vector<int> widths;
  for (const auto& p : parts) widths.push_back(p.dim(1));
  return record(out, "concat_channels", parts, [offsets, widths](const Tensor& g) {
    std::vector<Tensor> grads;
    for (std::size_t i = 0; i < offsets.size(); ++i) grads.push_back(slice_channels(g, offsets[i], offsets[i] + widths[i]));
    return grads;
  });
}

Tensor slice_channels(const Tensor& t, int begin, int end) {
  if (t.ndim() < 2 || begin < 0 || end > t.dim(1) || begin >= end) {
    throw DimensionError("slice_channels [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                         shape_str(t.shape()));
  }
  Shape shape = t.shape();
  const int total = shape[1];
  shape[1] = end - begin;
  Tensor out = Tensor::empty(shape, t.dtype());
  const int n = shape[0];
  const std::int64_t inner = t.numel() / (static_cast<std::int64_t>(n) * total);
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < n; ++i) {
      std::copy_n(in.data() + (static_cast<std::int64_t>(i) * total + begin) * inner, (end - begin) * inner,
                  o.data() + static_cast<std::int64_t>(i) * (end - begin) * inner);
    }
  });
  return record(out, "slice_channels", {t},
                [begin, total](const Tensor& g) { return std::vector<Tensor>{pad_channels(g, begin, total)}; });
}

Tensor pad_channels(const Tensor& t, int begin, int total) {
  if (t.ndim() < 2 || begin < 0 || begin + t.dim(1) > total) {
    throw DimensionError("pad_channels: cannot place " + shape_str(t.shape()) + " at " + std::to_string(begin) +
                         " of " + std::to_string(total));
  }
  Shape shape = t.shape();
  const int c = shape[1];
  shape[1] = total;
  Tensor out = Tensor::zeros(shape, t.dtype());
  const int n = shape[0];
  const std::int64_t inner = t.numel() / (static_cast<std::int64_t>(n) * c);
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    for (int i = 0; i < n; ++i) {
      std::copy_n(in.data() + static_cast<std::int64_t>(i) * c * inner, c * inner,
                  o.data() + (static_cast<std::int64_t>(i) * total + begin) * inner);
    }
  });
  return record(out, "pad_channels", {t},
                [begin, c](const Tensor& g) { return std::vector<Tensor>{slice_channels(g, begin, begin + c)}; });
}

// ------------------------------------------------------- linear algebra, conv

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0) || a.dtype() != b.dtype()) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::empty({m, n}, a.dtype());
  dispatch(a.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::gemm<T>(m, n, k, a.values<T>().data(), b.values<T>().data(), out.mutable_values<T>().data());
  });
  return record(out, "matmul", {a, b}, [a, b](const Tensor& g) {
    return std::vector<Tensor>{matmul(g, transpose2d(b)), matmul(transpose2d(a), g)};
  });
}

Tensor add_bias(const Tensor& x, const Tensor& b) { return add(x, broadcast_channels(b, x.shape())); }

namespace {

kernels::ConvGeometry conv_geometry(const Shape& in, const Shape& w, int stride, int pad, const char* op) {
  if (in.size() != 4 || w.size() != 4) {
    throw DimensionError(std::string(op) + ": expected NCHW input and OIHW kernel, got " + shape_str(in) + " and " +
                         shape_str(w));
  }
  if (in[1] != w[1]) {
    throw DimensionError(std::string(op) + ": channel mismatch between input " + shape_str(in) + " and kernel " +
                         shape_str(w));
  }
  if (stride < 1 || pad < 0) throw DimensionError(std::string(op) + ": invalid stride/pad");
  kernels::ConvGeometry g;
  g.batch = in[0];
  g.in_channels = in[1];
  g.in_h = in[2];
  g.in_w = in[3];
  g.out_channels = w[0];
  g.kernel_h = w[2];
  g.kernel_w = w[3];
  g.stride = stride;
  g.pad = pad;
  if (!g.valid() || g.out_h() < 1 || g.out_w() < 1) {
    throw DimensionError(std::string(op) + ": non-positive output size for input " + shape_str(in) + " and kernel " +
                         shape_str(w));
  }
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int pad) {
  const auto g = conv_geometry(input.shape(), kernel.shape(), stride, pad, "conv2d");
  if (input.dtype() != kernel.dtype()) throw DimensionError("conv2d: dtype mismatch");
  Tensor out = Tensor::empty({g.batch, g.out_channels, g.out_h(), g.out_w()}, input.dtype());
  dispatch(input.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::conv2d_forward<T>(g, input.values<T>().data(), kernel.values<T>().data(),
                                         out.mutable_values<T>().data());
  });
  const Shape in_shape = input.shape();
  const Shape w_shape = kernel.shape();
  return record(out, "conv2d", {input, kernel}, [=](const Tensor& gy) {
    return std::vector<Tensor>{
        input.requires_grad() ? conv2d_input_grad(gy, kernel, in_shape, stride, pad) : Tensor{},
        kernel.requires_grad() ? conv2d_kernel_grad(input, gy, w_shape, stride, pad) : Tensor{}};
  });
}

Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& kernel, const Shape& input_shape, int stride, int pad) {
  const auto g = conv_geometry(input_shape, kernel.shape(), stride, pad, "conv2d_input_grad");
  const Shape expect{g.batch, g.out_channels, g.out_h(), g.out_w()};
  if (grad_out.shape() != expect) {
    throw DimensionError("conv2d_input_grad: gradient " + shape_str(grad_out.shape()) + " does not match " +
                         shape_str(expect));
  }
  Tensor out = Tensor::zeros(input_shape, grad_out.dtype());
  dispatch(grad_out.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::conv2d_backward_input<T>(g, grad_out.values<T>().data(), kernel.values<T>().data(),
                                                out.mutable_values<T>().data());
  });
  const Shape w_shape = kernel.shape();
  return record(out, "conv2d_input_grad", {grad_out, kernel}, [=](const Tensor& h) {
    return std::vector<Tensor>{
        grad_out.requires_grad() ? conv2d(h, kernel, stride, pad) : Tensor{},
        kernel.requires_grad() ? conv2d_kernel_grad(h, grad_out, w_shape, stride, pad) : Tensor{}};
  });
}

Tensor conv2d_kernel_grad(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape, int stride, int pad) {
  const auto g = conv_geometry(input.shape(), kernel_shape, stride, pad, "conv2d_kernel_grad");
  const Shape expect{g.batch, g.out_channels, g.out_h(), g.out_w()};
  if (grad_out.shape() != expect) {
    throw DimensionError("conv2d_kernel_grad: gradient " + shape_str(grad_out.shape()) + " does not match " +
                         shape_str(expect));
  }
  Tensor out = Tensor::zeros(kernel_shape, input.dtype());
  dispatch(input.dtype(), [&]<class T>(std::type_identity<T>) {
    kernels::parallel::conv2d_backward_weight<T>(g, input.values<T>().data(), grad_out.values<T>().data(),
                                                 out.mutable_values<T>().data());
  });
  const Shape in_shape = input.shape();
  return record(out, "conv2d_kernel_grad", {input, grad_out}, [=](const Tensor& h) {
    return std::vector<Tensor>{
        input.requires_grad() ? conv2d_input_grad(grad_out, h, in_shape, stride, pad) : Tensor{},
        grad_out.requires_grad() ? conv2d(input, h, stride, pad) : Tensor{}};
  });
}

Tensor upsample_nearest2x(const Tensor& t) {
  require_rank(t, 4, "upsample_nearest2x");
  const int n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  Tensor out = Tensor::empty({n, c, 2 * h, 2 * w}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    const std::int64_t planes = static_cast<std::int64_t>(n) * c;
    for (std::int64_t p = 0; p < planes; ++p) {
      const T* src = in.data() + p * h * w;
      T* dst = o.data() + p * 4 * h * w;
      for (int y = 0; y < 2 * h; ++y)
        for (int x = 0; x < 2 * w; ++x) dst[y * 2 * w + x] = src[(y / 2) * w + x / 2];
    }
  });
  return record(out, "upsample_nearest2x", {t},
                [](const Tensor& g) { return std::vector<Tensor>{scale(avgpool2x(g), 4.0)}; });
}

Tensor avgpool2x(const Tensor& t) {
  require_rank(t, 4, "avgpool2x");
  const int n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  if (h % 2 != 0 || w % 2 != 0) throw DimensionError("avgpool2x needs even spatial dims, got " + shape_str(t.shape()));
  const int oh = h / 2, ow = w / 2;
  Tensor out = Tensor::empty({n, c, oh, ow}, t.dtype());
  dispatch(t.dtype(), [&]<class T>(std::type_identity<T>) {
    auto in = t.values<T>();
    auto o = out.mutable_values<T>();
    const std::int64_t planes = static_cast<std::int64_t>(n) * c;
    for (std::int64_t p = 0; p < planes; ++p) {
      const T* src = in.data() + p * h * w;
      T* dst = o.data() + p * oh * ow;
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          const T s = (src[(2 * y) * w + 2 * x] + src[(2 * y) * w + 2 * x + 1]) +
                      (src[(2 * y + 1) * w + 2 * x] + src[(2 * y + 1) * w + 2 * x + 1]);
          dst[y * ow + x] = s * T(0.25);
        }
      }
    }
  });
  return record(out, "avgpool2x", {t},
                [](const Tensor& g) { return std::vector<Tensor>{scale(upsample_nearest2x(g), 0.25)}; });
}

Tensor pixelwise_norm(const Tensor& t, double eps) {
  if (eps <= 0.0) throw ArgumentError("pixelwise_norm needs eps > 0");
  if (t.ndim() == 2) {
    Tensor as4 = reshape(t, {t.dim(0), t.dim(1), 1, 1});
    return reshape(pixelwise_norm(as4, eps), t.shape());
  }
  require_rank(t, 4, "pixelwise_norm");
  const int c = t.dim(1);
  Tensor ms = add_scalar(scale(channel_sum(mul(t, t)), 1.0 / c), eps);
  return mul(t, channel_broadcast(rsqrt(ms), c));
}

Tensor instance_norm(const Tensor& t, double eps) {
  if (eps <= 0.0) throw ArgumentError("instance_norm needs eps > 0");
  require_rank(t, 4, "instance_norm");
  const int planes = t.dim(0) * t.dim(1);
  const int area = t.dim(2) * t.dim(3);
  const Shape flat{planes, area};
  Tensor x = reshape(t, flat);
  Tensor centred = sub(x, expand_per_sample(scale(sum_per_sample(x), 1.0 / area), flat));
  Tensor var = scale(sum_per_sample(mul(centred, centred)), 1.0 / area);
  return reshape(mul(centred, expand_per_sample(rsqrt(add_scalar(var, eps)), flat)), t.shape());
}

}  // namespace synthaug::nn

// Copyright 2026 The PInSAR Authors
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

#include "pinsar/autodiff/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>

namespace pinsar::ad {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
Tensor<T> record(Shape shape, std::vector<T> value, std::initializer_list<Tensor<T>> inputs,
                 std::string_view op, std::function<void(Node<T>&)> fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) track = track || (in.defined() && in.requires_grad());
  }
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    node->op = op;
    for (const auto& in : inputs) {
      node->inputs.push_back(in.defined() ? in.node_ptr() : std::make_shared<Node<T>>());
    }
    node->backward_fn = std::move(fn);
  }
  return Tensor<T>(std::move(node));
}

// Gradient buffer of input i, or nullptr when it does not need one.
template <typename T>
T* grad_of(Node<T>& self, std::size_t i) {
  Node<T>* in = self.inputs[i].get();
  if (!in->requires_grad) return nullptr;
  in->ensure_grad();
  return in->grad.data();
}

std::size_t norm_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

std::vector<std::size_t> contiguous_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

// Strides of `in` viewed through the broadcast shape `out` (0 on expanded dims).
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> st(out.size(), 0);
  const auto cs = contiguous_strides(in);
  const std::size_t off = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) st[off + i] = in[i] == 1 ? 0 : cs[i];
  return st;
}

// Calls f(out_index, a_offset, b_offset) for every element of `out`.
template <class F>
void broadcast_loop(const Shape& out, const std::vector<std::size_t>& sa,
                    const std::vector<std::size_t>& sb, F&& f) {
  const std::size_t r = out.size();
  const std::size_t n = numel(out);
  if (r == 0) {
    f(0, 0, 0);
    return;
  }
  if (n == 0) return;
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  const std::size_t inner = out[r - 1];
  const std::size_t sai = sa[r - 1];
  const std::size_t sbi = sb[r - 1];
  for (std::size_t i = 0; i < n; i += inner) {
    for (std::size_t k = 0; k < inner; ++k) f(i + k, ia + k * sai, ib + k * sbi);
    for (std::size_t d = r - 1; d-- > 0;) {
      ++idx[d];
      ia += sa[d];
      ib += sb[d];
      if (idx[d] < out[d]) break;
      ia -= sa[d] * out[d];
      ib -= sb[d] * out[d];
      idx[d] = 0;
    }
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit sp;
  for (std::size_t i = 0; i < axis; ++i) sp.outer *= s[i];
  sp.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) sp.inner *= s[i];
  return sp;
}

Shape reduced_shape(const Shape& s, std::size_t axis, bool keepdim) {
  Shape out = s;
  if (keepdim) {
    out[axis] = 1;
  } else {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  return out;
}

template <typename T, class Fwd, class Bwd>
Tensor<T> unary(const Tensor<T>& x, std::string_view op, Fwd fwd, Bwd bwd) {
  const auto& xv = x.values();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return record<T>(x.shape(), std::move(out), {x}, op, [bwd](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const auto& xin = self.inputs[0]->value;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.grad[i] * bwd(xin[i], self.value[i]);
    }
  });
}

template <typename T>
T erf_gelu_cdf(T x) {
  return T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast shapes " + to_string(a) + " and " + to_string(b));
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  auto sa = broadcast_strides(a.shape(), out);
  auto sb = broadcast_strides(b.shape(), out);
  std::vector<T> v(numel(out));
  const T* av = a.data().data();
  const T* bv = b.data().data();
  broadcast_loop(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) { v[i] = av[ia] + bv[ib]; });
  return record<T>(out, std::move(v), {a, b}, "add", [out, sa, sb](Node<T>& self) {
    T* ga = grad_of(self, 0);
    T* gb = grad_of(self, 1);
    const T* g = self.grad.data();
    broadcast_loop(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) ga[ia] += g[i];
      if (gb) gb[ib] += g[i];
    });
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  auto sa = broadcast_strides(a.shape(), out);
  auto sb = broadcast_strides(b.shape(), out);
  std::vector<T> v(numel(out));
  const T* av = a.data().data();
  const T* bv = b.data().data();
  broadcast_loop(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) { v[i] = av[ia] - bv[ib]; });
  return record<T>(out, std::move(v), {a, b}, "sub", [out, sa, sb](Node<T>& self) {
    T* ga = grad_of(self, 0);
    T* gb = grad_of(self, 1);
    const T* g = self.grad.data();
    broadcast_loop(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) ga[ia] += g[i];
      if (gb) gb[ib] -= g[i];
    });
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  auto sa = broadcast_strides(a.shape(), out);
  auto sb = broadcast_strides(b.shape(), out);
  std::vector<T> v(numel(out));
  const T* av = a.data().data();
  const T* bv = b.data().data();
  broadcast_loop(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) { v[i] = av[ia] * bv[ib]; });
  return record<T>(out, std::move(v), {a, b}, "mul", [out, sa, sb](Node<T>& self) {
    T* ga = grad_of(self, 0);
    T* gb = grad_of(self, 1);
    const T* av = self.inputs[0]->value.data();
    const T* bv = self.inputs[1]->value.data();
    const T* g = self.grad.data();
    broadcast_loop(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) ga[ia] += g[i] * bv[ib];
      if (gb) gb[ib] += g[i] * av[ia];
    });
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return unary<T>(x, "scale", [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s) {
  return unary<T>(x, "add_scalar", [s](T v) { return v + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T inv_sqrt_2pi = T(0.39894228040143267794);
  return unary<T>(
      x, "gelu", [](T v) { return v * erf_gelu_cdf(v); },
      [](T v, T) { return erf_gelu_cdf(v) + v * inv_sqrt_2pi * std::exp(T(-0.5) * v * v); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary<T>(x, "exp", [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  return unary<T>(x, "log", [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return unary<T>(x, "square", [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  return record<T>({}, {acc}, {x}, "sum", [](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const T g = self.grad[0];
    for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) gx[i] += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  const T inv = T(1) / static_cast<T>(x.numel());
  T acc = T(0);
  for (T v : x.data()) acc += v;
  return record<T>({}, {acc * inv}, {x}, "mean", [inv](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const T g = self.grad[0] * inv;
    for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) gx[i] += g;
  });
}

template <typename T>
Tensor<T> sum_axis(const Tensor<T>& x, int axis, bool keepdim) {
  const std::size_t ax = norm_axis(axis, x.rank());
  const AxisSplit sp = split_at(x.shape(), ax);
  std::vector<T> v(sp.outer * sp.inner, T(0));
  const T* xv = x.data().data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.n; ++k)
      for (std::size_t i = 0; i < sp.inner; ++i) v[o * sp.inner + i] += xv[(o * sp.n + k) * sp.inner + i];
  return record<T>(reduced_shape(x.shape(), ax, keepdim), std::move(v), {x}, "sum_axis", [sp](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t k = 0; k < sp.n; ++k)
        for (std::size_t i = 0; i < sp.inner; ++i) gx[(o * sp.n + k) * sp.inner + i] += self.grad[o * sp.inner + i];
  });
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, int axis, bool keepdim) {
  const std::size_t ax = norm_axis(axis, x.rank());
  return scale(sum_axis(x, axis, keepdim), T(1) / static_cast<T>(x.dim(ax)));
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const std::size_t ax = norm_axis(axis, x.rank());
  const AxisSplit sp = split_at(x.shape(), ax);
  const T* xv = x.data().data();
  std::vector<T> y(x.numel());
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t base = o * sp.n * sp.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < sp.n; ++k) mx = std::max(mx, xv[base + k * sp.inner]);
      T s = T(0);
      for (std::size_t k = 0; k < sp.n; ++k) {
        const T e = std::exp(xv[base + k * sp.inner] - mx);
        y[base + k * sp.inner] = e;
        s += e;
      }
      const T inv = T(1) / s;
      for (std::size_t k = 0; k < sp.n; ++k) y[base + k * sp.inner] *= inv;
    }
  }
  return record<T>(x.shape(), std::move(y), {x}, "softmax", [sp](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const T* yv = self.value.data();
    const T* g = self.grad.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t base = o * sp.n * sp.inner + i;
        T dot = T(0);
        for (std::size_t k = 0; k < sp.n; ++k) dot += g[base + k * sp.inner] * yv[base + k * sp.inner];
        for (std::size_t k = 0; k < sp.n; ++k) {
          const std::size_t j = base + k * sp.inner;
          gx[j] += yv[j] * (g[j] - dot);
        }
      }
    }
  });
}

namespace {

// Row-wise log-sum-exp along a split axis.
template <typename T>
std::vector<T> lse_rows(const T* xv, const AxisSplit& sp) {
  std::vector<T> out(sp.outer * sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t base = o * sp.n * sp.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < sp.n; ++k) mx = std::max(mx, xv[base + k * sp.inner]);
      T s = T(0);
      for (std::size_t k = 0; k < sp.n; ++k) s += std::exp(xv[base + k * sp.inner] - mx);
      out[o * sp.inner + i] = mx + std::log(s);
    }
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, int axis) {
  const std::size_t ax = norm_axis(axis, x.rank());
  const AxisSplit sp = split_at(x.shape(), ax);
  const T* xv = x.data().data();
  const auto lse = lse_rows(xv, sp);
  std::vector<T> y(x.numel());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.n; ++k)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t j = (o * sp.n + k) * sp.inner + i;
        y[j] = xv[j] - lse[o * sp.inner + i];
      }
  return record<T>(x.shape(), std::move(y), {x}, "log_softmax", [sp](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const T* yv = self.value.data();
    const T* g = self.grad.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t base = o * sp.n * sp.inner + i;
        T gs = T(0);
        for (std::size_t k = 0; k < sp.n; ++k) gs += g[base + k * sp.inner];
        for (std::size_t k = 0; k < sp.n; ++k) {
          const std::size_t j = base + k * sp.inner;
          gx[j] += g[j] - std::exp(yv[j]) * gs;
        }
      }
    }
  });
}

template <typename T>
Tensor<T> logsumexp(const Tensor<T>& x, int axis, bool keepdim) {
  const std::size_t ax = norm_axis(axis, x.rank());
  const AxisSplit sp = split_at(x.shape(), ax);
  auto lse = lse_rows(x.data().data(), sp);
  return record<T>(reduced_shape(x.shape(), ax, keepdim), std::move(lse), {x}, "logsumexp", [sp](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const T* xv = self.inputs[0]->value.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t k = 0; k < sp.n; ++k)
        for (std::size_t i = 0; i < sp.inner; ++i) {
          const std::size_t r = o * sp.inner + i;
          const std::size_t j = (o * sp.n + k) * sp.inner + i;
          gx[j] += self.grad[r] * std::exp(xv[j] - self.value[r]);
        }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm on a scalar");
  const std::size_t c = x.shape().back();
  if (gamma.numel() != c || beta.numel() != c) {
    throw DimensionError("layer_norm: affine params " + to_string(gamma.shape()) + "/" +
                         to_string(beta.shape()) + " do not match last axis of " + to_string(x.shape()));
  }
  const std::size_t rows = x.numel() / c;
  const T* xv = x.data().data();
  const T* gv = gamma.data().data();
  const T* bv = beta.data().data();
  std::vector<T> y(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv + r * c;
    T mu = T(0);
    for (std::size_t i = 0; i < c; ++i) mu += row[i];
    mu /= static_cast<T>(c);
    T var = T(0);
    for (std::size_t i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(c);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t i = 0; i < c; ++i) {
      const T h = (row[i] - mu) * rs;
      xhat[r * c + i] = h;
      y[r * c + i] = h * gv[i] + bv[i];
    }
  }
  return record<T>(x.shape(), std::move(y), {x, gamma, beta}, "layer_norm",
                   [c, rows, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
                     T* gx = grad_of(self, 0);
                     T* gg = grad_of(self, 1);
                     T* gb = grad_of(self, 2);
                     const T* gam = self.inputs[1]->value.data();
                     const T* g = self.grad.data();
                     const T invc = T(1) / static_cast<T>(c);
                     for (std::size_t r = 0; r < rows; ++r) {
                       const T* gr = g + r * c;
                       const T* hr = xhat.data() + r * c;
                       T m1 = T(0);
                       T m2 = T(0);
                       for (std::size_t i = 0; i < c; ++i) {
                         const T dh = gr[i] * gam[i];
                         m1 += dh;
                         m2 += dh * hr[i];
                         if (gg) gg[i] += gr[i] * hr[i];
                         if (gb) gb[i] += gr[i];
                       }
                       if (!gx) continue;
                       m1 *= invc;
                       m2 *= invc;
                       for (std::size_t i = 0; i < c; ++i) {
                         gx[r * c + i] += rstd[r] * (gr[i] * gam[i] - m1 - hr[i] * m2);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t k = a.shape().back();
  const std::size_t kb = b.shape()[b.rank() - 2];
  const std::size_t n = b.shape().back();
  if (k != kb) {
    throw DimensionError("matmul inner dimensions differ: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  Shape out = a.shape();
  out.back() = n;
  if (b.rank() == 2) {
    const std::size_t m = a.numel() / k;
    std::vector<T> v(m * n);
    MapMat<T>(v.data(), m, n).noalias() = CMapMat<T>(a.data().data(), m, k) * CMapMat<T>(b.data().data(), k, n);
    return record<T>(out, std::move(v), {a, b}, "matmul", [m, k, n](Node<T>& self) {
      T* ga = grad_of(self, 0);
      T* gb = grad_of(self, 1);
      CMapMat<T> g(self.grad.data(), m, n);
      if (ga) MapMat<T>(ga, m, k).noalias() += g * CMapMat<T>(self.inputs[1]->value.data(), k, n).transpose();
      if (gb) MapMat<T>(gb, k, n).noalias() += CMapMat<T>(self.inputs[0]->value.data(), m, k).transpose() * g;
    });
  }
  if (a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin())) {
    throw DimensionError("batched matmul batch dimensions differ: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.shape()[a.rank() - 2];
  const std::size_t batch = a.numel() / (m * k);
  std::vector<T> v(batch * m * n);
  for (std::size_t i = 0; i < batch; ++i) {
    MapMat<T>(v.data() + i * m * n, m, n).noalias() =
        CMapMat<T>(a.data().data() + i * m * k, m, k) * CMapMat<T>(b.data().data() + i * k * n, k, n);
  }
  return record<T>(out, std::move(v), {a, b}, "bmm", [batch, m, k, n](Node<T>& self) {
    T* ga = grad_of(self, 0);
    T* gb = grad_of(self, 1);
    const T* av = self.inputs[0]->value.data();
    const T* bv = self.inputs[1]->value.data();
    for (std::size_t i = 0; i < batch; ++i) {
      CMapMat<T> g(self.grad.data() + i * m * n, m, n);
      if (ga) MapMat<T>(ga + i * m * k, m, k).noalias() += g * CMapMat<T>(bv + i * k * n, k, n).transpose();
      if (gb) MapMat<T>(gb + i * k * n, k, n).noalias() += CMapMat<T>(av + i * m * k, m, k).transpose() * g;
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("cannot reshape " + to_string(x.shape()) + " to " + to_string(shape));
  }
  return record<T>(std::move(shape), x.values(), {x}, "reshape", [](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const std::size_t r = x.rank();
  if (perm.size() != r) throw DimensionError("permute: permutation rank does not match " + to_string(x.shape()));
  std::vector<bool> used(r, false);
  for (std::size_t p : perm) {
    if (p >= r || used[p]) throw DimensionError("permute: invalid permutation");
    used[p] = true;
  }
  const auto cs = contiguous_strides(x.shape());
  Shape out(r);
  std::vector<std::size_t> src(r);
  for (std::size_t i = 0; i < r; ++i) {
    out[i] = x.shape()[perm[i]];
    src[i] = cs[perm[i]];
  }
  const std::vector<std::size_t> none(r, 0);
  std::vector<T> v(x.numel());
  const T* xv = x.data().data();
  broadcast_loop(out, src, none, [&](std::size_t i, std::size_t ix, std::size_t) { v[i] = xv[ix]; });
  return record<T>(out, std::move(v), {x}, "permute", [out, src, none](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    const T* g = self.grad.data();
    broadcast_loop(out, src, none, [&](std::size_t i, std::size_t ix, std::size_t) { gx[ix] += g[i]; });
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, int axis0, int axis1) {
  std::vector<std::size_t> perm(x.rank());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::swap(perm[norm_axis(axis0, x.rank())], perm[norm_axis(axis1, x.rank())]);
  return permute(x, perm);
}

template <typename T>
Tensor<T> roll(const Tensor<T>& x, const std::vector<std::ptrdiff_t>& shifts) {
  const std::size_t r = x.rank();
  if (shifts.size() > r) throw DimensionError("roll: more shifts than axes");
  const auto cs = contiguous_strides(x.shape());
  // Source offset for each output element, computed once and reused by backward.
  std::vector<std::size_t> src(x.numel());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) {
      const auto n = static_cast<std::ptrdiff_t>(x.shape()[d]);
      std::ptrdiff_t s = d < shifts.size() ? shifts[d] % n : 0;
      std::ptrdiff_t j = (static_cast<std::ptrdiff_t>(idx[d]) - s) % n;
      if (j < 0) j += n;
      off += static_cast<std::size_t>(j) * cs[d];
    }
    src[i] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < x.shape()[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<T> v(x.numel());
  const T* xv = x.data().data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[src[i]];
  return record<T>(x.shape(), std::move(v), {x}, "roll", [src = std::move(src)](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < src.size(); ++i) gx[src[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  if (x.rank() != 4 || w.rank() != 4 || w.dim(2) != w.dim(3)) {
    throw DimensionError("conv2d expects B x C x H x W input and F x C x k x k kernel, got " +
                         to_string(x.shape()) + " and " + to_string(w.shape()));
  }
  if (x.dim(1) != w.dim(1)) {
    throw DimensionError("conv2d channel mismatch: " + to_string(x.shape()) + " vs " + to_string(w.shape()));
  }
  if (stride == 0) throw ConfigError("conv2d stride must be positive");
  const std::size_t bsz = x.dim(0), ch = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t f = w.dim(0), k = w.dim(2);
  if (h + 2 * padding < k || wd + 2 * padding < k) {
    throw ConfigError("conv2d kernel " + std::to_string(k) + " does not fit padded input " + to_string(x.shape()));
  }
  if ((h + 2 * padding - k) % stride != 0 || (wd + 2 * padding - k) % stride != 0) {
    throw ConfigError("conv2d output size is not integral for input " + to_string(x.shape()) + ", kernel " +
                      std::to_string(k) + ", stride " + std::to_string(stride) + ", padding " +
                      std::to_string(padding));
  }
  if (bias.defined() && bias.numel() != f) throw DimensionError("conv2d bias size does not match filters");
  const std::size_t oh = (h + 2 * padding - k) / stride + 1;
  const std::size_t ow = (wd + 2 * padding - k) / stride + 1;
  const std::size_t rows = ch * k * k;
  const std::size_t cols = oh * ow;

  auto im2col = [=](const T* img, T* col) {
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t ki = 0; ki < k; ++ki)
        for (std::size_t kj = 0; kj < k; ++kj) {
          T* dst = col + ((c * k + ki) * k + kj) * cols;
          for (std::size_t y = 0; y < oh; ++y) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + ki) - static_cast<std::ptrdiff_t>(padding);
            for (std::size_t xo = 0; xo < ow; ++xo) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * stride + kj) - static_cast<std::ptrdiff_t>(padding);
              const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) && ix < static_cast<std::ptrdiff_t>(wd);
              dst[y * ow + xo] = inside ? img[(c * h + static_cast<std::size_t>(iy)) * wd + static_cast<std::size_t>(ix)] : T(0);
            }
          }
        }
  };

  std::vector<T> out(bsz * f * cols);
  std::vector<T> col(rows * cols);
  CMapMat<T> wm(w.data().data(), f, rows);
  for (std::size_t b = 0; b < bsz; ++b) {
    im2col(x.data().data() + b * ch * h * wd, col.data());
    MapMat<T> o(out.data() + b * f * cols, f, cols);
    o.noalias() = wm * CMapMat<T>(col.data(), rows, cols);
    if (bias.defined()) {
      for (std::size_t fi = 0; fi < f; ++fi) o.row(fi).array() += bias.data()[fi];
    }
  }

  auto fn = [=](Node<T>& self) {
    T* gx = grad_of(self, 0);
    T* gw = grad_of(self, 1);
    T* gb = self.inputs.size() > 2 && self.inputs[2]->requires_grad ? grad_of(self, 2) : nullptr;
    const T* xv = self.inputs[0]->value.data();
    CMapMat<T> wmat(self.inputs[1]->value.data(), f, rows);
    std::vector<T> colb(rows * cols);
    std::vector<T> dcol(rows * cols);
    for (std::size_t b = 0; b < bsz; ++b) {
      CMapMat<T> g(self.grad.data() + b * f * cols, f, cols);
      if (gb) {
        // Plain loop: Eigen's vectorized sum peels by runtime alignment, so its
        // rounding would depend on where the gradient buffer was allocated.
        for (std::size_t fi = 0; fi < f; ++fi) {
          const T* row = self.grad.data() + (b * f + fi) * cols;
          T acc = T(0);
          for (std::size_t j = 0; j < cols; ++j) acc += row[j];
          gb[fi] += acc;
        }
      }
      if (gw) {
        im2col(xv + b * ch * h * wd, colb.data());
        MapMat<T>(gw, f, rows).noalias() += g * CMapMat<T>(colb.data(), rows, cols).transpose();
      }
      if (gx) {
        MapMat<T>(dcol.data(), rows, cols).noalias() = wmat.transpose() * g;
        T* img = gx + b * ch * h * wd;
        for (std::size_t c = 0; c < ch; ++c)
          for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj) {
              const T* src = dcol.data() + ((c * k + ki) * k + kj) * cols;
              for (std::size_t y = 0; y < oh; ++y) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + ki) - static_cast<std::ptrdiff_t>(padding);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t xo = 0; xo < ow; ++xo) {
                  const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * stride + kj) - static_cast<std::ptrdiff_t>(padding);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                  img[(c * h + static_cast<std::size_t>(iy)) * wd + static_cast<std::size_t>(ix)] += src[y * ow + xo];
                }
              }
            }
      }
    }
  };
  Shape oshape{bsz, f, oh, ow};
  if (bias.defined()) return record<T>(oshape, std::move(out), {x, w, bias}, "conv2d", fn);
  return record<T>(oshape, std::move(out), {x, w}, "conv2d", fn);
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t kernel) {
  if (x.rank() < 2 || kernel == 0) throw DimensionError("max_pool2d needs rank >= 2 input");
  const std::size_t h = x.shape()[x.rank() - 2];
  const std::size_t w = x.shape().back();
  if (h % kernel != 0 || w % kernel != 0) {
    throw ConfigError("max_pool2d: spatial size " + to_string(x.shape()) + " not divisible by " +
                      std::to_string(kernel));
  }
  const std::size_t planes = x.numel() / (h * w);
  const std::size_t oh = h / kernel;
  const std::size_t ow = w / kernel;
  std::vector<T> v(planes * oh * ow);
  std::vector<std::size_t> arg(v.size());
  const T* xv = x.data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xo = 0; xo < ow; ++xo) {
        std::size_t best = p * h * w + (y * kernel) * w + xo * kernel;
        for (std::size_t i = 0; i < kernel; ++i)
          for (std::size_t j = 0; j < kernel; ++j) {
            const std::size_t off = p * h * w + (y * kernel + i) * w + xo * kernel + j;
            if (xv[off] > xv[best]) best = off;
          }
        const std::size_t o = (p * oh + y) * ow + xo;
        v[o] = xv[best];
        arg[o] = best;
      }
  Shape out = x.shape();
  out[out.size() - 2] = oh;
  out.back() = ow;
  return record<T>(out, std::move(v), {x}, "max_pool2d", [arg = std::move(arg)](Node<T>& self) {
    T* gx = grad_of(self, 0);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> index) {
  if (table.rank() != 2) throw DimensionError("gather_rows expects a 2-D table, got " + to_string(table.shape()));
  const std::size_t rows = table.dim(0);
  const std::size_t cols = table.dim(1);
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<T> v(idx.size() * cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) throw DimensionError("gather_rows index out of range");
    std::copy_n(table.data().data() + idx[i] * cols, cols, v.data() + i * cols);
  }
  return record<T>({idx.size(), cols}, std::move(v), {table}, "gather_rows", [idx, cols](Node<T>& self) {
    T* gt = grad_of(self, 0);
    if (gt == nullptr) return;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) gt[idx[i] * cols + c] += self.grad[i * cols + c];
  });
}

template <typename T>
Tensor<T> squared_distances(const Tensor<T>& z, const Tensor<T>& m) {
  if (z.rank() != 2 || m.rank() != 2 || z.dim(1) != m.dim(1)) {
    throw DimensionError("squared_distances expects B x d and P x d, got " + to_string(z.shape()) + " and " +
                         to_string(m.shape()));
  }
  const std::size_t b = z.dim(0), p = m.dim(0), d = z.dim(1);
  const T* zv = z.data().data();
  const T* mv = m.data().data();
  std::vector<T> v(b * p);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      T acc = T(0);
      for (std::size_t k = 0; k < d; ++k) {
        const T diff = zv[i * d + k] - mv[j * d + k];
        acc += diff * diff;
      }
      v[i * p + j] = acc;
    }
  return record<T>({b, p}, std::move(v), {z, m}, "squared_distances", [b, p, d](Node<T>& self) {
    T* gz = grad_of(self, 0);
    T* gm = grad_of(self, 1);
    const T* zv = self.inputs[0]->value.data();
    const T* mv = self.inputs[1]->value.data();
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const T g2 = T(2) * self.grad[i * p + j];
        for (std::size_t k = 0; k < d; ++k) {
          const T diff = g2 * (zv[i * d + k] - mv[j * d + k]);
          if (gz) gz[i * d + k] += diff;
          if (gm) gm[j * d + k] -= diff;
        }
      }
  });
}

#define PINSAR_INSTANTIATE_OPS(T)                                                                    \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                                     \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                \
  template Tensor<T> relu(const Tensor<T>&);                                                         \
  template Tensor<T> gelu(const Tensor<T>&);                                                         \
  template Tensor<T> exp(const Tensor<T>&);                                                          \
  template Tensor<T> log(const Tensor<T>&);                                                          \
  template Tensor<T> square(const Tensor<T>&);                                                       \
  template Tensor<T> sum(const Tensor<T>&);                                                          \
  template Tensor<T> mean(const Tensor<T>&);                                                         \
  template Tensor<T> sum_axis(const Tensor<T>&, int, bool);                                          \
  template Tensor<T> mean_axis(const Tensor<T>&, int, bool);                                         \
  template Tensor<T> softmax(const Tensor<T>&, int);                                                 \
  template Tensor<T> log_softmax(const Tensor<T>&, int);                                             \
  template Tensor<T> logsumexp(const Tensor<T>&, int, bool);                                         \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                               \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                     \
  template Tensor<T> transpose(const Tensor<T>&, int, int);                                          \
  template Tensor<T> roll(const Tensor<T>&, const std::vector<std::ptrdiff_t>&);                     \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                            std::size_t);                                                            \
  template Tensor<T> max_pool2d(const Tensor<T>&, std::size_t);                                      \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                    \
  template Tensor<T> squared_distances(const Tensor<T>&, const Tensor<T>&);

PINSAR_INSTANTIATE_OPS(float)
PINSAR_INSTANTIATE_OPS(double)

#undef PINSAR_INSTANTIATE_OPS

}  // namespace pinsar::ad

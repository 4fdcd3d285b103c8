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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pinsar/autodiff/tensor.hpp"

// Differentiable operators over Tensor<float> / Tensor<double>. Binary
// elementwise ops broadcast numpy-style (right-aligned, size-1 dims expand).
// Negative axes count from the back.
namespace pinsar::ad {

Shape broadcast_shape(const Shape& a, const Shape& b);

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& x, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T s);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
/// Exact (erf) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> exp(const Tensor<T>& x);
template <typename T> Tensor<T> log(const Tensor<T>& x);
template <typename T> Tensor<T> square(const Tensor<T>& x);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
template <typename T> Tensor<T> sum_axis(const Tensor<T>& x, int axis, bool keepdim = false);
template <typename T> Tensor<T> mean_axis(const Tensor<T>& x, int axis, bool keepdim = false);

/// Max-subtracted; stable for any finite input.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, int axis = -1);
template <typename T> Tensor<T> log_softmax(const Tensor<T>& x, int axis = -1);
template <typename T> Tensor<T> logsumexp(const Tensor<T>& x, int axis, bool keepdim = false);

/// Normalizes over the last axis; gamma and beta have the size of that axis.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

/// (..., m, k) x (k, n) -> (..., m, n), or batched (b..., m, k) x (b..., k, n).
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm);
template <typename T> Tensor<T> transpose(const Tensor<T>& x, int axis0, int axis1);
/// Cyclic shift; shifts[i] applies to axis i (numpy.roll semantics).
template <typename T>
Tensor<T> roll(const Tensor<T>& x, const std::vector<std::ptrdiff_t>& shifts);

/// Cross-correlation. x: B x C x H x W, w: F x C x k x k, bias: F or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t padding = 0);
/// Non-overlapping k x k max pooling over the last two axes.
template <typename T> Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t kernel);

/// Rows of a 2-D table selected by index: (n) -> n x cols.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> index);

/// ||z_b - m_p||^2 for z: B x d, m: P x d.
template <typename T> Tensor<T> squared_distances(const Tensor<T>& z, const Tensor<T>& m);

template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }

}  // namespace pinsar::ad

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

#include <cmath>

#include "pinsar/encoder/encoder.hpp"
#include "pinsar/error.hpp"

namespace pinsar::encoder {

using ad::Shape;

namespace {

// Swin rule: a stage whose grid fits in one window uses that single window and never shifts.
std::size_t effective_window(std::size_t grid, std::size_t window) { return std::min(grid, window); }

template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, std::size_t heads) {
  const std::size_t bw = x.dim(0), n = x.dim(1), c = x.dim(2);
  return ad::permute(ad::reshape(x, {bw, n, heads, c / heads}), {0, 2, 1, 3});
}

}  // namespace

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, std::size_t m) {
  if (x.rank() != 4) throw DimensionError("window_partition expects B x H x W x C, got " + ad::to_string(x.shape()));
  const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (m == 0 || h % m != 0 || w % m != 0) {
    throw ConfigError("token grid " + std::to_string(h) + "x" + std::to_string(w) +
                      " is not divisible by window size " + std::to_string(m));
  }
  auto t = ad::reshape(x, {b, h / m, m, w / m, m, c});
  t = ad::permute(t, {0, 1, 3, 2, 4, 5});
  return ad::reshape(t, {b * (h / m) * (w / m), m * m, c});
}

template <typename T>
Tensor<T> window_reverse(const Tensor<T>& windows, std::size_t m, std::size_t b, std::size_t h, std::size_t w) {
  const std::size_t c = windows.dim(2);
  auto t = ad::reshape(windows, {b, h / m, w / m, m, m, c});
  t = ad::permute(t, {0, 1, 3, 2, 4, 5});
  return ad::reshape(t, {b, h, w, c});
}

std::vector<std::size_t> relative_position_index(std::size_t m) {
  const std::size_t n = m * m, span = 2 * m - 1;
  std::vector<std::size_t> idx(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t di = a / m + (m - 1) - b / m;
      const std::size_t dj = a % m + (m - 1) - b % m;
      idx[a * n + b] = di * span + dj;
    }
  return idx;
}

template <typename T>
Tensor<T> shifted_window_mask(std::size_t h, std::size_t w, std::size_t m, std::size_t shift) {
  if (h % m != 0 || w % m != 0) throw ConfigError("mask grid is not divisible by the window size");
  // Region labels of the rolled grid: the wrapped strips differ from the interior.
  auto region = [&](std::size_t i, std::size_t len) -> std::size_t {
    if (shift == 0) return 0;
    return i < len - m ? 0 : (i < len - shift ? 1 : 2);
  };
  const std::size_t nwh = h / m, nww = w / m, n = m * m;
  std::vector<T> mask(nwh * nww * n * n, T(0));
  std::vector<std::size_t> label(n);
  for (std::size_t wi = 0; wi < nwh; ++wi)
    for (std::size_t wj = 0; wj < nww; ++wj) {
      for (std::size_t t = 0; t < n; ++t) label[t] = 3 * region(wi * m + t / m, h) + region(wj * m + t % m, w);
      T* out = mask.data() + (wi * nww + wj) * n * n;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          if (label[a] != label[b]) out[a * n + b] = static_cast<T>(kMaskedLogit);
    }
  return Tensor<T>::from({nwh * nww, n, n}, std::move(mask));
}

template <typename T>
PatchEmbed<T>::PatchEmbed(std::size_t in_channels, std::size_t p, std::size_t dim, std::mt19937_64& rng)
    : patch(p), proj(in_channels * p * p, dim, rng) {}

template <typename T>
Tensor<T> PatchEmbed<T>::operator()(const Tensor<T>& x) const {
  if (x.rank() != 4) throw DimensionError("patch_embed expects B x C x H x W, got " + ad::to_string(x.shape()));
  const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), p = patch;
  if (h % p != 0 || w % p != 0) {
    throw ConfigError("image " + std::to_string(h) + "x" + std::to_string(w) + " is not divisible by patch size " +
                      std::to_string(p));
  }
  if (c * p * p != proj.in_features()) {
    throw DimensionError("patch_embed expects " + std::to_string(proj.in_features() / (p * p)) +
                         " input channels, got " + std::to_string(c));
  }
  auto t = ad::reshape(x, {b, c, h / p, p, w / p, p});
  t = ad::permute(t, {0, 2, 4, 1, 3, 5});
  return proj(ad::reshape(t, {b, h / p, w / p, c * p * p}));
}

template <typename T>
WindowAttention<T>::WindowAttention(std::size_t d, std::size_t nh, std::size_t m, std::mt19937_64& rng)
    : dim(d), heads(nh), window(m), q(d, d, rng), k(d, d, rng), v(d, d, rng), proj(d, d, rng) {
  if (nh == 0 || d % nh != 0) {
    throw ConfigError("embedding width " + std::to_string(d) + " is not divisible by " + std::to_string(nh) + " heads");
  }
  const std::size_t span = 2 * m - 1;
  bias_table = Tensor<T>::from({span * span, nh}, ad::normal_values<T>(span * span * nh, 0.02, rng), true);
}

template <typename T>
void WindowAttention<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  proj.collect(prefix + ".proj", out);
  out.push_back({prefix + ".relative_position_bias", bias_table});
}

template <typename T>
Tensor<T> WindowAttention<T>::operator()(const Tensor<T>& x, std::size_t shift, AttentionCapture<T>* capture) const {
  if (x.rank() != 4 || x.dim(3) != dim) {
    throw DimensionError("window attention expects B x H x W x " + std::to_string(dim) + ", got " +
                         ad::to_string(x.shape()));
  }
  const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2), m = window, n = m * m;
  if (shift >= m) throw ConfigError("shift must be smaller than the window size");
  const auto s = static_cast<std::ptrdiff_t>(shift);

  const Tensor<T> rolled = shift > 0 ? ad::roll(x, {0, -s, -s}) : x;
  const Tensor<T> win = window_partition(rolled, m);
  const std::size_t bw = win.dim(0), nw = bw / b;

  const auto qh = split_heads(q(win), heads);
  const auto kh = split_heads(k(win), heads);
  const auto vh = split_heads(v(win), heads);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dim / heads)));
  auto logits = ad::scale(ad::matmul(qh, ad::transpose(kh, 2, 3)), scale);

  static thread_local std::vector<std::size_t> index_cache;
  static thread_local std::size_t index_window = 0;
  if (index_window != m) {
    index_cache = relative_position_index(m);
    index_window = m;
  }
  const auto bias = ad::permute(ad::reshape(ad::gather_rows(bias_table, index_cache), {n, n, heads}), {2, 0, 1});
  logits = ad::add(logits, bias);
  if (shift > 0) {
    const auto mask = ad::reshape(shifted_window_mask<T>(h, w, m, shift), {nw, 1, n, n});
    logits = ad::reshape(ad::add(ad::reshape(logits, {b, nw, heads, n, n}), mask), {bw, heads, n, n});
  }
  const auto attn = ad::softmax(logits, -1);
  if (capture != nullptr) {
    capture->weights = attn.values();
    capture->batch = b;
    capture->windows = nw;
    capture->heads = heads;
    capture->tokens = n;
    capture->window_size = m;
    capture->shift = shift;
    capture->grid = h;
  }
  auto out = ad::permute(ad::matmul(attn, vh), {0, 2, 1, 3});
  out = proj(ad::reshape(out, {bw, n, dim}));
  Tensor<T> y = window_reverse(out, m, b, h, w);
  return shift > 0 ? ad::roll(y, {0, s, s}) : y;
}

template <typename T>
SwinBlock<T>::SwinBlock(std::size_t dim, std::size_t heads, std::size_t window, std::size_t sh,
                        std::size_t mlp_ratio, std::mt19937_64& rng)
    : shift(sh),
      norm1(dim),
      norm2(dim),
      attn(dim, heads, window, rng),
      fc1(dim, dim * mlp_ratio, rng),
      fc2(dim * mlp_ratio, dim, rng) {}

template <typename T>
Tensor<T> SwinBlock<T>::operator()(const Tensor<T>& x, AttentionCapture<T>* capture) const {
  auto t = ad::add(x, attn(norm1(x), shift, capture));
  return ad::add(t, fc2(ad::gelu(fc1(norm2(t)))));
}

template <typename T>
void SwinBlock<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  norm1.collect(prefix + ".norm1", out);
  attn.collect(prefix + ".attn", out);
  norm2.collect(prefix + ".norm2", out);
  fc1.collect(prefix + ".mlp.fc1", out);
  fc2.collect(prefix + ".mlp.fc2", out);
}

template <typename T>
PatchMerge<T>::PatchMerge(std::size_t dim, std::mt19937_64& rng) : reduction(4 * dim, 2 * dim, rng) {}

template <typename T>
Tensor<T> PatchMerge<T>::operator()(const Tensor<T>& x) const {
  if (x.rank() != 4) throw DimensionError("patch_merge expects B x H x W x C, got " + ad::to_string(x.shape()));
  const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ConfigError("patch_merge needs even grid dimensions, got " + std::to_string(h) + "x" + std::to_string(w));
  }
  if (4 * c != reduction.in_features()) throw DimensionError("patch_merge channel mismatch");
  auto t = ad::reshape(x, {b, h / 2, 2, w / 2, 2, c});
  t = ad::permute(t, {0, 1, 3, 4, 2, 5});
  return reduction(ad::reshape(t, {b, h / 2, w / 2, 4 * c}));
}

template <typename T>
TinySwin<T>::TinySwin(const EncoderConfig& config, std::mt19937_64& rng) : Encoder<T>(config) {
  config.validate();
  embed = PatchEmbed<T>(input_channels(config.encoding), config.patch_size, config.embed_dim, rng);
  std::size_t grid = config.image_size / config.patch_size;
  std::size_t dim = config.embed_dim;
  for (std::size_t s = 0; s < config.depths.size(); ++s) {
    const std::size_t m = effective_window(grid, config.window_size);
    const std::size_t half = grid > m ? m / 2 : 0;
    std::vector<SwinBlock<T>> blocks;
    for (std::size_t i = 0; i < config.depths[s]; ++i) {
      blocks.emplace_back(dim, config.heads[s], m, i % 2 == 1 ? half : 0, config.mlp_ratio, rng);
    }
    stages.push_back(std::move(blocks));
    merges.emplace_back(dim, rng);
    dim *= 2;
    grid /= 2;
  }
  norm = LayerNorm<T>(dim);
}

template <typename T>
Tensor<T> TinySwin<T>::forward(const Tensor<T>& x, AttentionCapture<T>* capture) const {
  this->check_input(x);
  auto t = embed(x);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (std::size_t i = 0; i < stages[s].size(); ++i) {
      const bool last = s + 1 == stages.size() && i + 1 == stages[s].size();
      t = stages[s][i](t, last ? capture : nullptr);
    }
    t = merges[s](t);
  }
  const std::size_t b = t.dim(0), tokens = t.dim(1) * t.dim(2), c = t.dim(3);
  return ad::mean_axis(norm(ad::reshape(t, {b, tokens, c})), 1);
}

template <typename T>
ParameterList<T> TinySwin<T>::parameters() const {
  ParameterList<T> out;
  embed.collect("embed", out);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (std::size_t i = 0; i < stages[s].size(); ++i) {
      stages[s][i].collect("stages." + std::to_string(s) + ".blocks." + std::to_string(i), out);
    }
    merges[s].collect("stages." + std::to_string(s) + ".merge", out);
  }
  norm.collect("norm", out);
  return out;
}

#define PINSAR_INSTANTIATE_SWIN(T)                                                                          \
  template Tensor<T> window_partition(const Tensor<T>&, std::size_t);                                      \
  template Tensor<T> window_reverse(const Tensor<T>&, std::size_t, std::size_t, std::size_t, std::size_t); \
  template Tensor<T> shifted_window_mask<T>(std::size_t, std::size_t, std::size_t, std::size_t);           \
  template class PatchEmbed<T>;                                                                             \
  template class WindowAttention<T>;                                                                        \
  template class SwinBlock<T>;                                                                              \
  template class PatchMerge<T>;                                                                             \
  template class TinySwin<T>;

PINSAR_INSTANTIATE_SWIN(float)
PINSAR_INSTANTIATE_SWIN(double)

}  // namespace pinsar::encoder

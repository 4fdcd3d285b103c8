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

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pinsar/autodiff/nn.hpp"

namespace pinsar::encoder {

using ad::Linear;
using ad::LayerNorm;
using ad::ParameterList;
using ad::Tensor;

enum class EncoderKind { tiny_cnn, tiny_swin };
std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

/// phase / pi in one channel, or (cos phase, sin phase) in two.
enum class InputEncoding { scaled_phase, cos_sin };
std::string to_string(InputEncoding encoding);
InputEncoding input_encoding_from_string(const std::string& name);
std::size_t input_channels(InputEncoding encoding);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::tiny_swin;
  InputEncoding encoding = InputEncoding::scaled_phase;
  std::size_t image_size = 64;
  // tiny_swin
  std::size_t patch_size = 4;
  std::size_t window_size = 4;
  std::size_t embed_dim = 32;
  std::vector<std::size_t> depths{2, 2};
  std::vector<std::size_t> heads{2, 4};
  std::size_t mlp_ratio = 4;
  // tiny_cnn
  std::vector<std::size_t> cnn_channels{8, 16, 32};
  std::size_t cnn_output_dim = 128;

  void validate() const;
  std::size_t output_dim() const;
};

/// Packs wrapped-phase images (row-major, image_size^2 each) into a B x C x H x W batch.
template <typename T>
Tensor<T> encode_batch(const std::vector<const float*>& images, std::size_t image_size, InputEncoding encoding);

/// Softmax weights of one attention layer: (B * windows) x heads x M^2 x M^2.
template <typename T>
struct AttentionCapture {
  std::vector<T> weights;
  std::size_t batch = 0, windows = 0, heads = 0, tokens = 0;
  std::size_t window_size = 0, shift = 0, grid = 0;
};

// ---- shifted-window building blocks (B x H x W x C token grids) ----

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, std::size_t m);
template <typename T>
Tensor<T> window_reverse(const Tensor<T>& windows, std::size_t m, std::size_t batch, std::size_t h, std::size_t w);

/// Row-major index into the (2M-1)^2 relative position table for every token pair of an M x M window.
std::vector<std::size_t> relative_position_index(std::size_t m);

/// Additive mask (windows x M^2 x M^2) for a grid rolled by -shift: 0 inside a region, kMaskedLogit across seams.
template <typename T>
Tensor<T> shifted_window_mask(std::size_t h, std::size_t w, std::size_t m, std::size_t shift);

inline constexpr double kMaskedLogit = -1e9;

template <typename T>
class PatchEmbed {
 public:
  PatchEmbed() = default;
  PatchEmbed(std::size_t in_channels, std::size_t patch, std::size_t dim, std::mt19937_64& rng);
  /// B x C x H x W -> B x H/p x W/p x dim
  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const { proj.collect(prefix + ".proj", out); }

  std::size_t patch = 4;
  Linear<T> proj;
};

template <typename T>
class WindowAttention {
 public:
  WindowAttention() = default;
  WindowAttention(std::size_t dim, std::size_t heads, std::size_t window, std::mt19937_64& rng);
  /// Attention inside M x M windows of a B x H x W x C grid; shift > 0 selects the rolled, masked variant.
  Tensor<T> operator()(const Tensor<T>& x, std::size_t shift, AttentionCapture<T>* capture = nullptr) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;

  std::size_t dim = 0, heads = 0, window = 0;
  Linear<T> q, k, v, proj;
  Tensor<T> bias_table;  // (2M-1)^2 x heads
};

template <typename T>
class SwinBlock {
 public:
  SwinBlock() = default;
  SwinBlock(std::size_t dim, std::size_t heads, std::size_t window, std::size_t shift, std::size_t mlp_ratio,
            std::mt19937_64& rng);
  /// Pre-norm: x + attn(norm1(x)), then x + mlp(norm2(x)).
  Tensor<T> operator()(const Tensor<T>& x, AttentionCapture<T>* capture = nullptr) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;

  std::size_t shift = 0;
  LayerNorm<T> norm1, norm2;
  WindowAttention<T> attn;
  Linear<T> fc1, fc2;
};

template <typename T>
class PatchMerge {
 public:
  PatchMerge() = default;
  PatchMerge(std::size_t dim, std::mt19937_64& rng);
  /// B x H x W x C -> B x H/2 x W/2 x 2C; channels ordered (0,0), (1,0), (0,1), (1,1).
  Tensor<T> operator()(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const { reduction.collect(prefix + ".reduction", out); }

  Linear<T> reduction;
};

template <typename T>
class Encoder {
 public:
  virtual ~Encoder() = default;
  /// B x C x H x W -> B x output_dim
  virtual Tensor<T> forward(const Tensor<T>& x) const = 0;
  virtual ParameterList<T> parameters() const = 0;
  const EncoderConfig& config() const { return config_; }
  std::size_t output_dim() const { return config_.output_dim(); }

 protected:
  explicit Encoder(EncoderConfig config) : config_(std::move(config)) {}
  void check_input(const Tensor<T>& x) const;

  EncoderConfig config_;
};

template <typename T>
class TinySwin final : public Encoder<T> {
 public:
  TinySwin(const EncoderConfig& config, std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x) const override { return forward(x, nullptr); }
  /// capture receives the weights of the last block of the last stage.
  Tensor<T> forward(const Tensor<T>& x, AttentionCapture<T>* capture) const;
  ParameterList<T> parameters() const override;

  PatchEmbed<T> embed;
  std::vector<std::vector<SwinBlock<T>>> stages;
  std::vector<PatchMerge<T>> merges;
  LayerNorm<T> norm;
};

template <typename T>
class TinyCnn final : public Encoder<T> {
 public:
  TinyCnn(const EncoderConfig& config, std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x) const override;
  ParameterList<T> parameters() const override;

  struct Conv {
    Tensor<T> weight;  // F x C x 3 x 3
    Tensor<T> bias;    // F
  };
  std::vector<Conv> convs;
  Linear<T> head;
};

template <typename T>
std::unique_ptr<Encoder<T>> make_encoder(const EncoderConfig& config, std::uint64_t seed);

}  // namespace pinsar::encoder

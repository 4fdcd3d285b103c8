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
#include <numbers>

#include "pinsar/encoder/encoder.hpp"
#include "pinsar/error.hpp"

namespace pinsar::encoder {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::tiny_cnn ? "tiny_cnn" : "tiny_swin"; }

EncoderKind encoder_kind_from_string(const std::string& name) {
  if (name == "tiny_cnn") return EncoderKind::tiny_cnn;
  if (name == "tiny_swin") return EncoderKind::tiny_swin;
  throw ConfigError("unknown encoder '" + name + "' (expected tiny_cnn or tiny_swin)");
}

std::string to_string(InputEncoding e) { return e == InputEncoding::cos_sin ? "cos_sin" : "scaled_phase"; }

InputEncoding input_encoding_from_string(const std::string& name) {
  if (name == "scaled_phase") return InputEncoding::scaled_phase;
  if (name == "cos_sin") return InputEncoding::cos_sin;
  throw ConfigError("unknown input encoding '" + name + "' (expected scaled_phase or cos_sin)");
}

std::size_t input_channels(InputEncoding e) { return e == InputEncoding::cos_sin ? 2 : 1; }

void EncoderConfig::validate() const {
  if (image_size == 0) throw ConfigError("image_size must be positive");
  if (kind == EncoderKind::tiny_cnn) {
    if (cnn_channels.empty()) throw ConfigError("tiny_cnn needs at least one conv block");
    if (image_size % (std::size_t{1} << cnn_channels.size()) != 0) {
      throw ConfigError("image_size " + std::to_string(image_size) + " is not divisible by 2^" +
                        std::to_string(cnn_channels.size()) + " pooling");
    }
    if (cnn_output_dim == 0) throw ConfigError("cnn output_dim must be positive");
    return;
  }
  if (patch_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) + " is not divisible by patch size " +
                      std::to_string(patch_size));
  }
  if (depths.empty() || depths.size() != heads.size()) throw ConfigError("depths and heads must have equal, non-zero length");
  if (window_size == 0 || embed_dim == 0 || mlp_ratio == 0) throw ConfigError("window, embed and mlp sizes must be positive");
  std::size_t grid = image_size / patch_size, dim = embed_dim;
  for (std::size_t s = 0; s < depths.size(); ++s) {
    const std::size_t m = std::min(grid, window_size);
    if (grid % m != 0) {
      throw ConfigError("stage " + std::to_string(s) + " grid " + std::to_string(grid) +
                        " is not divisible by window size " + std::to_string(m));
    }
    if (grid % 2 != 0) throw ConfigError("stage " + std::to_string(s) + " grid is odd; patch merging needs even grids");
    if (heads[s] == 0 || dim % heads[s] != 0) {
      throw ConfigError("stage " + std::to_string(s) + " width " + std::to_string(dim) + " is not divisible by " +
                        std::to_string(heads[s]) + " heads");
    }
    grid /= 2;
    dim *= 2;
  }
}

std::size_t EncoderConfig::output_dim() const {
  if (kind == EncoderKind::tiny_cnn) return cnn_output_dim;
  return embed_dim << depths.size();
}

template <typename T>
Tensor<T> encode_batch(const std::vector<const float*>& images, std::size_t n, InputEncoding encoding) {
  const std::size_t c = input_channels(encoding), px = n * n;
  std::vector<T> v(images.size() * c * px);
  for (std::size_t b = 0; b < images.size(); ++b) {
    T* out = v.data() + b * c * px;
    const float* img = images[b];
    if (encoding == InputEncoding::scaled_phase) {
      for (std::size_t k = 0; k < px; ++k) out[k] = static_cast<T>(img[k] / std::numbers::pi);
    } else {
      for (std::size_t k = 0; k < px; ++k) {
        out[k] = static_cast<T>(std::cos(static_cast<double>(img[k])));
        out[px + k] = static_cast<T>(std::sin(static_cast<double>(img[k])));
      }
    }
  }
  return Tensor<T>::from({images.size(), c, n, n}, std::move(v));
}

template <typename T>
void Encoder<T>::check_input(const Tensor<T>& x) const {
  const std::size_t c = input_channels(config_.encoding), n = config_.image_size;
  if (x.rank() != 4 || x.dim(1) != c || x.dim(2) != n || x.dim(3) != n) {
    throw DimensionError("encoder expects B x " + std::to_string(c) + " x " + std::to_string(n) + " x " +
                         std::to_string(n) + " input, got " + ad::to_string(x.shape()));
  }
}

template <typename T>
TinyCnn<T>::TinyCnn(const EncoderConfig& config, std::mt19937_64& rng) : Encoder<T>(config) {
  config.validate();
  std::size_t in = input_channels(config.encoding), side = config.image_size;
  for (std::size_t f : config.cnn_channels) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * 9));
    Conv conv;
    conv.weight = Tensor<T>::from({f, in, 3, 3}, ad::uniform_values<T>(f * in * 9, bound, rng), true);
    conv.bias = Tensor<T>::from({f}, ad::uniform_values<T>(f, bound, rng), true);
    convs.push_back(std::move(conv));
    in = f;
    side /= 2;
  }
  head = Linear<T>(in * side * side, config.cnn_output_dim, rng);
}

template <typename T>
Tensor<T> TinyCnn<T>::forward(const Tensor<T>& x) const {
  this->check_input(x);
  Tensor<T> t = x;
  for (const auto& conv : convs) t = ad::max_pool2d(ad::relu(ad::conv2d(t, conv.weight, conv.bias, 1, 1)), 2);
  const std::size_t b = t.dim(0);
  return head(ad::reshape(t, {b, t.numel() / b}));
}

template <typename T>
ParameterList<T> TinyCnn<T>::parameters() const {
  ParameterList<T> out;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    out.push_back({"convs." + std::to_string(i) + ".weight", convs[i].weight});
    out.push_back({"convs." + std::to_string(i) + ".bias", convs[i].bias});
  }
  head.collect("head", out);
  return out;
}

template <typename T>
std::unique_ptr<Encoder<T>> make_encoder(const EncoderConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (config.kind == EncoderKind::tiny_cnn) return std::make_unique<TinyCnn<T>>(config, rng);
  return std::make_unique<TinySwin<T>>(config, rng);
}

#define PINSAR_INSTANTIATE_ENCODER(T)                                                                   \
  template Tensor<T> encode_batch<T>(const std::vector<const float*>&, std::size_t, InputEncoding);     \
  template class Encoder<T>;                                                                            \
  template class TinyCnn<T>;                                                                            \
  template std::unique_ptr<Encoder<T>> make_encoder<T>(const EncoderConfig&, std::uint64_t);

PINSAR_INSTANTIATE_ENCODER(float)
PINSAR_INSTANTIATE_ENCODER(double)

}  // namespace pinsar::encoder

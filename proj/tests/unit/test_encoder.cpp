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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "pinsar/encoder/encoder.hpp"
#include "pinsar/error.hpp"

using namespace pinsar;
using namespace pinsar::encoder;
using pinsar::testing::grad_check;
using pinsar::testing::random_tensor;
using TD = ad::Tensor<double>;

namespace {

void fill(TD& t, double v) {
  for (auto& x : t.mutable_data()) x = v;
}

// Loop-level attention over a B x H x W x C grid: roll by -shift, attend inside
// each M x M window among tokens whose unrolled positions are within one window
// of each other, roll back. Shares only the parameter values with the module.
std::vector<double> reference_attention(const WindowAttention<double>& a, const TD& x, std::size_t shift) {
  const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3), m = a.window, nh = a.heads;
  const std::size_t hd = c / nh, n = m * m, span = 2 * m - 1;
  const auto& xv = x.data();
  auto at = [&](std::size_t bi, std::size_t i, std::size_t j, std::size_t ch) {
    return xv[((bi * h + i) * w + j) * c + ch];
  };
  auto affine = [&](const Linear<double>& l, const std::vector<double>& in, std::size_t o) {
    double s = l.bias.data()[o];
    for (std::size_t i = 0; i < in.size(); ++i) s += in[i] * l.weight.data()[i * l.out_features() + o];
    return s;
  };
  std::vector<double> out(x.numel(), 0.0);
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t wi = 0; wi < h / m; ++wi)
      for (std::size_t wj = 0; wj < w / m; ++wj) {
        // Original coordinates of the window's tokens in the unrolled grid.
        std::vector<std::size_t> oi(n), oj(n);
        std::vector<std::vector<double>> tok(n, std::vector<double>(c));
        for (std::size_t t = 0; t < n; ++t) {
          oi[t] = (wi * m + t / m + shift) % h;
          oj[t] = (wj * m + t % m + shift) % w;
          for (std::size_t ch = 0; ch < c; ++ch) tok[t][ch] = at(bi, oi[t], oj[t], ch);
        }
        std::vector<std::vector<double>> q(n, std::vector<double>(c)), k = q, v = q, mixed = q;
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t o = 0; o < c; ++o) {
            q[t][o] = affine(a.q, tok[t], o);
            k[t][o] = affine(a.k, tok[t], o);
            v[t][o] = affine(a.v, tok[t], o);
          }
        for (std::size_t hh = 0; hh < nh; ++hh)
          for (std::size_t p = 0; p < n; ++p) {
            std::vector<double> logit(n);
            double mx = -1e300;
            for (std::size_t r = 0; r < n; ++r) {
              double s = 0;
              for (std::size_t e = 0; e < hd; ++e) s += q[p][hh * hd + e] * k[r][hh * hd + e];
              s /= std::sqrt(static_cast<double>(hd));
              const std::size_t rel = (p / m + m - 1 - r / m) * span + (p % m + m - 1 - r % m);
              s += a.bias_table.data()[rel * nh + hh];
              const auto di = std::abs(static_cast<long>(oi[p]) - static_cast<long>(oi[r]));
              const auto dj = std::abs(static_cast<long>(oj[p]) - static_cast<long>(oj[r]));
              if (di >= static_cast<long>(m) || dj >= static_cast<long>(m)) s = -std::numeric_limits<double>::infinity();
              logit[r] = s;
              mx = std::max(mx, s);
            }
            double z = 0;
            for (auto& l : logit) z += (l = std::exp(l - mx));
            for (std::size_t e = 0; e < hd; ++e) {
              double s = 0;
              for (std::size_t r = 0; r < n; ++r) s += logit[r] / z * v[r][hh * hd + e];
              mixed[p][hh * hd + e] = s;
            }
          }
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t o = 0; o < c; ++o) out[((bi * h + oi[t]) * w + oj[t]) * c + o] = affine(a.proj, mixed[t], o);
      }
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

EncoderConfig small_swin() {
  EncoderConfig c;
  c.image_size = 16;
  c.patch_size = 4;
  c.window_size = 2;
  c.embed_dim = 4;
  c.depths = {2, 2};
  c.heads = {1, 2};
  c.mlp_ratio = 2;
  return c;
}

}  // namespace

TEST_CASE("patch_embed shapes and zero input") {
  std::mt19937_64 rng(1);
  PatchEmbed<double> pe(1, 4, 32, rng);
  auto x = random_tensor({2, 1, 64, 64}, rng, 1.0, false);
  CHECK(pe(x).shape() == ad::Shape{2, 16, 16, 32});
  fill(pe.proj.bias, 0.0);
  CHECK(pe(TD::zeros({1, 1, 64, 64})).values() == std::vector<double>(16 * 16 * 32, 0.0));
  CHECK_THROWS_AS(pe(TD::zeros({1, 1, 62, 64})), ConfigError);
}

TEST_CASE("patch_embed with identity projection flattens patches") {
  std::mt19937_64 rng(2);
  PatchEmbed<double> pe(1, 4, 16, rng);
  fill(pe.proj.weight, 0.0);
  fill(pe.proj.bias, 0.0);
  for (std::size_t i = 0; i < 16; ++i) pe.proj.weight.mutable_data()[i * 16 + i] = 1.0;
  auto x = random_tensor({2, 1, 8, 12}, rng, 1.0, false);
  const auto y = pe(x);
  REQUIRE(y.shape() == ad::Shape{2, 2, 3, 16});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t pi = 0; pi < 2; ++pi)
      for (std::size_t pj = 0; pj < 3; ++pj)
        for (std::size_t u = 0; u < 4; ++u)
          for (std::size_t v = 0; v < 4; ++v)
            CHECK(y.at({b, pi, pj, u * 4 + v}) == x.at({b, 0, pi * 4 + u, pj * 4 + v}));
}

TEST_CASE("window attention is local to its window") {
  std::mt19937_64 rng(3);
  WindowAttention<double> a(8, 2, 4, rng);
  auto x = random_tensor({1, 8, 8, 8}, rng, 1.0, false);
  const auto y0 = a(x, 0).values();
  // Perturb every token outside the top-left window.
  auto data = x.mutable_data();
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      if (i >= 4 || j >= 4)
        for (std::size_t ch = 0; ch < 8; ++ch) data[(i * 8 + j) * 8 + ch] += 3.0;
  const auto y1 = a(x, 0).values();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t ch = 0; ch < 8; ++ch) REQUIRE(y0[(i * 8 + j) * 8 + ch] == y1[(i * 8 + j) * 8 + ch]);
  CHECK(y0 != y1);
  CHECK_THROWS_AS(a(TD::zeros({1, 6, 8, 8}), 0), ConfigError);
}

TEST_CASE("window attention matches the loop oracle") {
  std::mt19937_64 rng(4);
  SUBCASE("single window equals global attention") {
    WindowAttention<double> a(6, 3, 4, rng);
    auto x = random_tensor({2, 4, 4, 6}, rng, 1.0, false);
    CHECK(max_diff(a(x, 0).values(), reference_attention(a, x, 0)) < 1e-10);
  }
  SUBCASE("unshifted windows") {
    WindowAttention<double> a(8, 2, 4, rng);
    auto x = random_tensor({2, 8, 12, 8}, rng, 1.0, false);
    CHECK(max_diff(a(x, 0).values(), reference_attention(a, x, 0)) < 1e-10);
  }
  SUBCASE("shifted windows against manual roll and mask") {
    WindowAttention<double> a(8, 2, 4, rng);
    for (int t = 0; t < 3; ++t) {
      auto x = random_tensor({2, 8, 8, 8}, rng, 1.0, false);
      CHECK(max_diff(a(x, 2).values(), reference_attention(a, x, 2)) < 1e-10);
    }
    WindowAttention<double> a5(4, 1, 4, rng);
    auto x = random_tensor({1, 12, 8, 4}, rng, 1.0, false);
    CHECK(max_diff(a5(x, 1).values(), reference_attention(a5, x, 1)) < 1e-10);
  }
}

TEST_CASE("attention weights: rows, uniform case and seam mask") {
  std::mt19937_64 rng(5);
  WindowAttention<double> a(8, 2, 4, rng);
  SUBCASE("identical tokens and zero bias give uniform weights") {
    fill(a.bias_table, 0.0);
    auto x = TD::full({1, 8, 8, 8}, 0.7);
    AttentionCapture<double> cap;
    a(x, 0, &cap);
    REQUIRE(cap.weights.size() == 4 * 2 * 16 * 16);
    for (double wv : cap.weights) REQUIRE(wv == doctest::Approx(1.0 / 16).epsilon(1e-12));
  }
  SUBCASE("rows sum to one") {
    auto x = random_tensor({3, 8, 8, 8}, rng, 5.0, false);
    for (std::size_t shift : {0u, 2u}) {
      AttentionCapture<double> cap;
      a(x, shift, &cap);
      const std::size_t n = cap.tokens;
      for (std::size_t r = 0; r < cap.weights.size() / n; ++r) {
        double s = 0;
        for (std::size_t j = 0; j < n; ++j) s += cap.weights[r * n + j];
        REQUIRE(std::abs(s - 1.0) < 1e-6);
      }
    }
  }
  SUBCASE("no attention across the seam") {
    auto x = random_tensor({1, 8, 8, 8}, rng, 1.0, false);
    AttentionCapture<double> cap;
    const std::size_t m = 4, s = 2, n = 16;
    a(x, s, &cap);
    std::size_t masked = 0;
    for (std::size_t win = 0; win < 4; ++win)
      for (std::size_t hh = 0; hh < 2; ++hh)
        for (std::size_t p = 0; p < n; ++p)
          for (std::size_t r = 0; r < n; ++r) {
            const std::size_t wi = win / 2, wj = win % 2;
            const long pi = (wi * m + p / m + s) % 8, pj = (wj * m + p % m + s) % 8;
            const long ri = (wi * m + r / m + s) % 8, rj = (wj * m + r % m + s) % 8;
            const double wv = cap.weights[((win * 2 + hh) * n + p) * n + r];
            if (std::abs(pi - ri) >= 4 || std::abs(pj - rj) >= 4) {
              REQUIRE(wv < 1e-6);
              ++masked;
            } else {
              REQUIRE(wv > 0.0);
            }
          }
    CHECK(masked > 0);
    const auto zero_mask = shifted_window_mask<double>(8, 8, 4, 0);
    CHECK(zero_mask.values() == std::vector<double>(zero_mask.numel(), 0.0));
  }
}

TEST_CASE("patch_merge") {
  std::mt19937_64 rng(6);
  PatchMerge<double> pm(32, rng);
  CHECK(pm(TD::zeros({1, 16, 16, 32})).shape() == ad::Shape{1, 8, 8, 64});
  fill(pm.reduction.bias, 0.0);
  CHECK(pm(TD::zeros({1, 4, 4, 32})).values() == std::vector<double>(4 * 64, 0.0));
  CHECK_THROWS_AS(pm(TD::zeros({1, 5, 4, 32})), ConfigError);

  PatchMerge<double> small(3, rng);
  auto x = random_tensor({2, 4, 6, 3}, rng, 1.0, false);
  const auto y = small(x);
  const auto& W = small.reduction.weight.data();
  const auto& bias = small.reduction.bias.data();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        // Gathered neighbourhood in (0,0), (1,0), (0,1), (1,1) order.
        std::vector<double> cat;
        for (auto [di, dj] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}})
          for (std::size_t ch = 0; ch < 3; ++ch) cat.push_back(x.at({b, 2 * i + di, 2 * j + dj, ch}));
        for (std::size_t o = 0; o < 6; ++o) {
          double s = bias[o];
          for (std::size_t r = 0; r < 12; ++r) s += cat[r] * W[r * 6 + o];
          CHECK(y.at({b, i, j, o}) == doctest::Approx(s).epsilon(1e-12));
        }
      }
}

TEST_CASE("blocks with zeroed output projections are the identity") {
  std::mt19937_64 rng(7);
  for (std::size_t shift : {0u, 2u}) {
    SwinBlock<double> blk(8, 2, 4, shift, 4, rng);
    for (TD* t : {&blk.attn.proj.weight, &blk.attn.proj.bias, &blk.fc2.weight, &blk.fc2.bias}) fill(*t, 0.0);
    auto x = random_tensor({2, 8, 8, 8}, rng, 1.0, false);
    CHECK(blk(x).values() == x.values());
  }
}

TEST_CASE("default encoders: shapes, parameter counts, determinism") {
  EncoderConfig swin;
  EncoderConfig cnn;
  cnn.kind = EncoderKind::tiny_cnn;
  auto s = make_encoder<float>(swin, 11);
  auto c = make_encoder<float>(cnn, 11);
  CHECK(s->output_dim() == 128);
  CHECK(c->output_dim() == 128);
  // Regression guards: patch embed 544, stage blocks 2x12802 and 2x50180, merges 8256 + 32896, norm 256.
  CHECK(ad::count_parameters(s->parameters()) == 167916);
  // Convs 80 + 1168 + 4640, dense 2048 x 128 + 128.
  CHECK(ad::count_parameters(c->parameters()) == 268160);

  std::mt19937_64 rng(8);
  std::vector<float> img(3 * 64 * 64);
  std::uniform_real_distribution<float> u(-3.14f, 3.14f);
  for (auto& v : img) v = u(rng);
  const auto x = encode_batch<float>({img.data(), img.data() + 4096, img.data() + 8192}, 64, InputEncoding::scaled_phase);
  for (auto* enc : {s.get(), c.get()}) {
    ad::NoGradGuard ng;
    const auto y = enc->forward(x);
    CHECK(y.shape() == ad::Shape{3, 128});
    CHECK(enc->forward(x).values() == y.values());
  }
  CHECK(make_encoder<float>(swin, 11)->forward(x).values() == s->forward(x).values());
  CHECK(make_encoder<float>(swin, 12)->forward(x).values() != s->forward(x).values());
  CHECK_THROWS_AS(s->forward(ad::Tensor<float>::zeros({1, 2, 64, 64})), DimensionError);

  swin.encoding = InputEncoding::cos_sin;
  auto s2 = make_encoder<float>(swin, 11);
  CHECK(s2->forward(encode_batch<float>({img.data()}, 64, InputEncoding::cos_sin)).shape() == ad::Shape{1, 128});
}

TEST_CASE("encode_batch") {
  std::vector<float> img{0.0f, 1.0f, -3.0f, 3.0f};
  const auto a = encode_batch<double>({img.data()}, 2, InputEncoding::scaled_phase);
  CHECK(a.shape() == ad::Shape{1, 1, 2, 2});
  CHECK(a.at({0, 0, 1, 0}) == doctest::Approx(-3.0 / std::numbers::pi));
  const auto b = encode_batch<double>({img.data()}, 2, InputEncoding::cos_sin);
  CHECK(b.shape() == ad::Shape{1, 2, 2, 2});
  CHECK(b.at({0, 0, 0, 1}) == doctest::Approx(std::cos(1.0)));
  CHECK(b.at({0, 1, 0, 1}) == doctest::Approx(std::sin(1.0)));
}

TEST_CASE("config validation") {
  EncoderConfig c;
  c.image_size = 62;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EncoderConfig{};
  c.heads = {3, 4};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EncoderConfig{};
  c.window_size = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(encoder_kind_from_string("resnet"), ConfigError);
}

TEST_CASE("encoder gradients match finite differences") {
  std::mt19937_64 rng(9);
  SUBCASE("tiny_swin") {
    auto enc = make_encoder<double>(small_swin(), 5);
    auto x = random_tensor({2, 1, 16, 16}, rng);
    auto proj = random_tensor({2, enc->output_dim()}, rng, 1.0, false);
    auto params = enc->parameters();
    std::vector<TD> leaves{x};
    for (auto& p : params) leaves.push_back(p.tensor);
    const auto r = grad_check([&] { return ad::sum(ad::mul(enc->forward(x), proj)); }, leaves, 1e-5);
    CAPTURE(r.max_rel_error);
    CHECK(r.checked > 500);
    CHECK(r.max_rel_error < 1e-4);
  }
  SUBCASE("tiny_cnn") {
    EncoderConfig c;
    c.kind = EncoderKind::tiny_cnn;
    c.image_size = 8;
    c.cnn_channels = {2, 3};
    c.cnn_output_dim = 4;
    auto enc = make_encoder<double>(c, 6);
    auto x = random_tensor({2, 1, 8, 8}, rng);
    auto proj = random_tensor({2, 4}, rng, 1.0, false);
    std::vector<TD> leaves{x};
    for (auto& p : enc->parameters()) leaves.push_back(p.tensor);
    const auto r = grad_check([&] { return ad::sum(ad::mul(enc->forward(x), proj)); }, leaves, 1e-6);
    CAPTURE(r.max_rel_error);
    CHECK(r.max_rel_error < 1e-4);
  }
}

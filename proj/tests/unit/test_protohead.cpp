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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "gradcheck.hpp"
#include "pinsar/error.hpp"
#include "pinsar/protohead/protohead.hpp"

using namespace pinsar;
using namespace pinsar::proto;
using pinsar::testing::grad_check;
using pinsar::testing::random_tensor;
using TD = ad::Tensor<double>;

namespace {

PrototypeBank<double> bank_from(std::size_t c, std::size_t k, std::vector<double> values, double gamma = 1.0,
                                double lambda = 1.0) {
  PrototypeBank<double> b;
  const std::size_t d = values.size() / (c * k);
  b.prototypes = TD::from({c, k, d}, std::move(values), true);
  b.gamma = gamma;
  b.lambda = lambda;
  return b;
}

PrototypeBank<double> random_bank(std::size_t c, std::size_t k, std::size_t d, std::mt19937_64& rng) {
  return PrototypeBank<double>(c, k, d, 1.0, default_lambda(d), rng);
}

Labels random_labels(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, static_cast<int>(c) - 1);
  Labels l(n);
  for (auto& y : l) y = u(rng);
  return l;
}

double brute_distance(const TD& z, std::size_t b, const TD& m, std::size_t flat) {
  const std::size_t d = z.dim(1);
  double s = 0;
  for (std::size_t e = 0; e < d; ++e) {
    const double diff = z.data()[b * d + e] - m.data()[flat * d + e];
    s += diff * diff;
  }
  return s;
}

}  // namespace

TEST_CASE("distances") {
  auto bank = bank_from(2, 1, {1, 0, 0, 0, 2, 0});
  auto z = TD::from({2, 3}, {1, 0, 0, 0, 0, 0});
  const auto d = distances(z, bank);
  CHECK(d.shape() == ad::Shape{2, 2, 1});
  CHECK(d.at({0, 0, 0}) == 0.0);
  CHECK(d.at({1, 0, 0}) == doctest::Approx(1.0));
  CHECK(d.at({1, 1, 0}) == doctest::Approx(4.0));

  std::mt19937_64 rng(1);
  auto rb = random_bank(3, 2, 5, rng);
  auto rz = random_tensor({7, 5}, rng);
  const auto rd = distances(rz, rb);
  for (std::size_t b = 0; b < 7; ++b)
    for (std::size_t f = 0; f < 6; ++f) {
      CHECK(std::abs(rd.data()[b * 6 + f] - brute_distance(rz, b, rb.prototypes, f)) < 1e-6);
      CHECK(rd.data()[b * 6 + f] >= 0.0);
    }
  CHECK_THROWS_AS(distances(TD::zeros({2, 4}), rb), DimensionError);
}

TEST_CASE("prototype and class probabilities") {
  const auto equal = prototype_probabilities(TD::full({3, 2, 2}, 5.0), 1.0);
  for (double p : equal.data()) CHECK(p == doctest::Approx(0.25));
  CHECK(class_probability(equal).values() == std::vector<double>(6, 0.5));

  const auto p = prototype_probabilities(TD::from({1, 2, 1}, {1.0, 2.0}), 1.0);
  CHECK(p.data()[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(p.data()[1] == doctest::Approx(0.2689).epsilon(1e-4));
  const double exact = std::exp(-1.0) / (std::exp(-1.0) + std::exp(-2.0));
  CHECK(p.data()[0] == doctest::Approx(exact).epsilon(1e-12));
  // K = 1: the class probability is the prototype probability.
  CHECK(class_probability(p).values() == p.values());

  const auto hard = prototype_probabilities(TD::from({1, 2, 1}, {1.0, 2.0}), 100.0);
  CHECK(hard.data()[0] > 1 - 1e-6);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    auto d = random_tensor({4, 3, 2}, rng, 10.0, false);
    for (auto& v : d.mutable_data()) v = std::abs(v);
    const auto pc = class_probability(prototype_probabilities(d, 1.0));
    for (std::size_t b = 0; b < 4; ++b) {
      double s = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = pc.data()[b * 3 + c];
        CHECK((v > 0.0 && v < 1.0));
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("extreme distances stay normalized in log space") {
  for (double gamma : {0.01, 1.0, 100.0}) {
    const auto d = TD::from({2, 2, 1}, {0.0, 1e6, 1e6, 1e6});
    const auto p = class_probability(prototype_probabilities(d, gamma));
    CHECK(std::abs(p.data()[0] + p.data()[1] - 1.0) < 1e-6);
    CHECK(std::abs(p.data()[2] + p.data()[3] - 1.0) < 1e-6);
    const auto logp = log_class_probability(d, gamma);
    for (double v : logp.data()) CHECK(std::isfinite(v));
    CHECK(std::isfinite(dce_loss(d, {1, 0}, gamma).item()));
  }
}

TEST_CASE("dce loss") {
  CHECK(dce_loss(TD::full({4, 2, 1}, 3.0), {0, 1, 1, 0}, 1.0).item() == doctest::Approx(std::log(2.0)));
  const auto d = TD::from({1, 2, 1}, {1.0, 2.0});
  CHECK(dce_loss(d, {0}, 1.0).item() == doctest::Approx(0.3133).epsilon(1e-4));
  CHECK(dce_loss(d, {0}, 1.0).item() == doctest::Approx(-std::log(std::exp(-1.0) / (std::exp(-1.0) + std::exp(-2.0)))));
  CHECK(dce_loss(TD::from({1, 2, 1}, {0.0, 50.0}), {0}, 1.0).item() < 1e-12);

  std::mt19937_64 rng(3);
  auto rd = random_tensor({5, 2, 3}, rng, 2.0, false);
  for (auto& v : rd.mutable_data()) v = std::abs(v);
  const Labels y{0, 1, 1, 0, 1};
  const double a = dce_loss(rd, y, 1.0).item();
  const double b = dce_loss_from_probabilities(class_probability(prototype_probabilities(rd, 1.0)), y).item();
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(a >= 0.0);
  CHECK_THROWS_AS(dce_loss(rd, {0, 1, 2, 0, 1}, 1.0), ContractError);
  CHECK_THROWS_AS(dce_loss(rd, {0, 1, -1, 0, 1}, 1.0), ContractError);
}

TEST_CASE("prototype loss") {
  auto bank = bank_from(2, 1, {1, 0, 0, 0, 5, 0});
  CHECK(pl_loss(distances(TD::from({1, 3}, {1, 0, 0}), bank), {0}).item() == 0.0);
  CHECK(pl_loss(distances(TD::from({1, 3}, {0, 0, 0}), bank), {0}).item() == doctest::Approx(1.0));

  // K = 2: the nearest correct-class prototype, checked by brute force.
  std::mt19937_64 rng(4);
  auto rb = random_bank(2, 2, 3, rng);
  for (int t = 0; t < 20; ++t) {
    auto z = random_tensor({6, 3}, rng);
    const auto y = random_labels(6, 2, rng);
    double expect = 0;
    for (std::size_t b = 0; b < 6; ++b) {
      const std::size_t c = static_cast<std::size_t>(y[b]);
      expect += std::min(brute_distance(z, b, rb.prototypes, c * 2), brute_distance(z, b, rb.prototypes, c * 2 + 1));
    }
    CHECK(pl_loss(distances(z, rb), y).item() == doctest::Approx(expect / 6).epsilon(1e-12));
  }
}

TEST_CASE("combined loss") {
  // Distances (1, 2) to the class-0 and class-1 prototypes with the sample in class 0.
  auto bank = bank_from(2, 1, {1, 0, 0, std::sqrt(2.0), 0, 0}, 1.0, 1.0);
  const auto z = TD::from({1, 3}, {0, 0, 0});
  CHECK(combined_loss(z, {0}, bank).item() == doctest::Approx(1.3133).epsilon(1e-4));

  std::mt19937_64 rng(5);
  auto rb = random_bank(2, 2, 4, rng);
  rb.lambda = 0.0;
  auto rz = random_tensor({8, 4}, rng);
  const auto y = random_labels(8, 2, rng);
  const double with_zero = combined_loss(rz, y, rb).item();
  const double plain = dce_loss(distances(rz, rb), y, rb.gamma).item();
  CHECK(std::memcmp(&with_zero, &plain, sizeof(double)) == 0);
}

TEST_CASE("combined loss gradients match finite differences") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t c = 2 + t % 2, k = 1 + t % 3, d = 1 + t % 5;
    auto bank = PrototypeBank<double>(c, k, d, 0.5 + 0.1 * t, default_lambda(d), rng);
    auto z = random_tensor({5, d}, rng);
    const auto y = random_labels(5, c, rng);
    const auto r = grad_check([&] { return combined_loss(z, y, bank); }, {z, bank.prototypes});
    CAPTURE(t);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("nearest-prototype classification") {
  auto bank = bank_from(2, 1, {0, 0, 0, 1, 1, 1});
  CHECK(classify_nearest(TD::from({1, 3}, {1, 1, 1}), bank) == Labels{1});
  CHECK(classify_nearest(TD::from({1, 3}, {0.5, 0.5, 0.5}), bank) == Labels{0});

  std::mt19937_64 rng(7);
  auto rb = random_bank(3, 2, 3, rng);
  auto z = random_tensor({1000, 3}, rng, 2.0, false);
  const auto pred = classify_nearest(z, rb);
  for (std::size_t b = 0; b < 1000; ++b) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < 6; ++f)
      if (brute_distance(z, b, rb.prototypes, f) < brute_distance(z, b, rb.prototypes, best)) best = f;
    REQUIRE(pred[b] == static_cast<int>(best / 2));
  }
}

TEST_CASE("decision is invariant to gamma and agrees with class probability") {
  std::mt19937_64 rng(8);
  auto bank = random_bank(2, 1, 3, rng);
  auto z = random_tensor({500, 3}, rng, 2.0, false);
  const auto nearest = classify_nearest(z, bank);
  for (double gamma : {0.01, 1.0, 100.0}) {
    const auto pc = class_probability(prototype_probabilities(distances(z, bank), gamma));
    CHECK(argmax_rows(pc) == nearest);
  }
}

TEST_CASE("a gradient step on the prototype loss pulls assigned prototypes closer") {
  std::mt19937_64 rng(9);
  for (double lr : {1e-3, 0.1, 0.5, 0.9}) {
    auto bank = random_bank(2, 2, 3, rng);
    auto z = random_tensor({16, 3}, rng, 1.0, false);
    const auto y = random_labels(16, 2, rng);
    auto loss = pl_loss(distances(z, bank), y);
    const double before = loss.item();
    loss.backward();
    auto m = bank.prototypes.mutable_data();
    const auto g = bank.prototypes.grad();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] -= lr * g[i];
    CAPTURE(lr);
    CHECK(pl_loss(distances(z, bank), y).item() < before);
  }
}

TEST_CASE("joint translation leaves distances and decisions unchanged") {
  std::mt19937_64 rng(10);
  auto bank = random_bank(2, 2, 3, rng);
  auto z = random_tensor({20, 3}, rng, 1.0, false);
  const auto y = random_labels(20, 2, rng);
  auto moved = bank;
  moved.prototypes = bank.prototypes.clone();
  auto zm = z.clone();
  const double c[3] = {3.5, -1.25, 7.0};
  for (std::size_t i = 0; i < moved.prototypes.numel(); ++i) moved.prototypes.mutable_data()[i] += c[i % 3];
  for (std::size_t i = 0; i < zm.numel(); ++i) zm.mutable_data()[i] += c[i % 3];
  const auto d0 = distances(z, bank).values(), d1 = distances(zm, moved).values();
  for (std::size_t i = 0; i < d0.size(); ++i) CHECK(std::abs(d0[i] - d1[i]) < 1e-6);
  CHECK(std::abs(combined_loss(z, y, bank).item() - combined_loss(zm, y, moved).item()) < 1e-6);
  CHECK(classify_nearest(z, bank) == classify_nearest(zm, moved));
}

TEST_CASE("projection heads and defaults") {
  std::mt19937_64 rng(11);
  Projection<double> lin(ProjectionMode::linear, 128, 3, rng);
  Projection<double> mlp(ProjectionMode::mlp3, 128, 3, rng);
  CHECK(lin.layers.size() == 1);
  CHECK(mlp.layers.size() == 3);
  CHECK(mlp.layers[0].out_features() == 64);
  CHECK(mlp.layers[1].out_features() == 16);
  auto f = random_tensor({4, 128}, rng, 1.0, false);
  CHECK(lin(f).shape() == ad::Shape{4, 3});
  CHECK(mlp(f).shape() == ad::Shape{4, 3});
  CHECK(mlp.parameters().size() == 6);
  CHECK(default_lambda(3) == 1.0);
  CHECK(default_lambda(100) == doctest::Approx(0.03));
  CHECK_THROWS_AS(PrototypeBank<double>(1, 1, 3, 1.0, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(PrototypeBank<double>(2, 1, 3, 0.0, 1.0, rng), ConfigError);
  CHECK(softmax_cross_entropy(TD::zeros({3, 2}), {0, 1, 1}).item() == doctest::Approx(std::log(2.0)));
}

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
#include <random>
#include <string>
#include <vector>

#include "pinsar/autodiff/nn.hpp"

// Distance-based classification against a learnable prototype bank.
namespace pinsar::proto {

using ad::Linear;
using ad::ParameterList;
using ad::Tensor;

using Labels = std::vector<int>;

/// PL weight when none is configured: 1 for d <= 3, otherwise 3 / d.
double default_lambda(std::size_t dim);

template <typename T>
class PrototypeBank {
 public:
  PrototypeBank() = default;
  /// classes x per_class x dim prototypes drawn i.i.d. from N(0, 1).
  PrototypeBank(std::size_t classes, std::size_t per_class, std::size_t dim, double gamma, double lambda,
                std::mt19937_64& rng);

  std::size_t classes() const { return prototypes.dim(0); }
  std::size_t per_class() const { return prototypes.dim(1); }
  std::size_t dim() const { return prototypes.dim(2); }
  void validate() const;
  void collect(const std::string& prefix, ParameterList<T>& out) const { out.push_back({prefix + ".prototypes", prototypes}); }

  Tensor<T> prototypes;  // C x K x d
  double gamma = 1.0;
  double lambda = 1.0;
};

enum class ProjectionMode { linear, mlp3 };
std::string to_string(ProjectionMode mode);
ProjectionMode projection_mode_from_string(const std::string& name);

/// Maps encoder features to prototype space: one affine map, or in -> 64 -> 16 -> d with GELU between.
template <typename T>
class Projection {
 public:
  Projection() = default;
  Projection(ProjectionMode mode, std::size_t in, std::size_t dim, std::mt19937_64& rng);

  Tensor<T> operator()(const Tensor<T>& features) const;
  void collect(const std::string& prefix, ParameterList<T>& out) const;
  ParameterList<T> parameters() const;

  ProjectionMode mode = ProjectionMode::linear;
  std::vector<Linear<T>> layers;
};

inline constexpr std::size_t kMlpHidden1 = 64;
inline constexpr std::size_t kMlpHidden2 = 16;

/// Squared Euclidean distances, B x d against the bank -> B x C x K.
template <typename T>
Tensor<T> distances(const Tensor<T>& z, const PrototypeBank<T>& bank);

/// Softmax of -gamma * distance over all C*K prototypes, normalized with log-sum-exp.
template <typename T>
Tensor<T> prototype_probabilities(const Tensor<T>& dist, double gamma);

/// Class probability: sum over each class's prototypes, B x C x K -> B x C.
template <typename T>
Tensor<T> class_probability(const Tensor<T>& proto_probs);

/// log p(y|x) for every class straight from distances (stable for any distance magnitude).
template <typename T>
Tensor<T> log_class_probability(const Tensor<T>& dist, double gamma);

/// Mean of -log p(y|x) over the batch, computed in log space.
template <typename T>
Tensor<T> dce_loss(const Tensor<T>& dist, const Labels& labels, double gamma);

/// The same loss from already-normalized class probabilities (B x C).
template <typename T>
Tensor<T> dce_loss_from_probabilities(const Tensor<T>& class_probs, const Labels& labels);

/// Mean squared distance to the nearest prototype of each sample's class; ties pick the lower index.
template <typename T>
Tensor<T> pl_loss(const Tensor<T>& dist, const Labels& labels);

/// dce + lambda * pl; exactly the dce term when lambda == 0.
template <typename T>
Tensor<T> combined_loss(const Tensor<T>& z, const Labels& labels, const PrototypeBank<T>& bank);

/// Class of the globally nearest prototype; ties go to the lower class index.
template <typename T>
Labels classify_nearest(const Tensor<T>& z, const PrototypeBank<T>& bank);

/// Softmax-baseline cross-entropy over B x C logits.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, const Labels& labels);

/// Row-wise argmax with lowest-index tie-break.
template <typename T>
Labels argmax_rows(const Tensor<T>& scores);

/// Per-sample one-hot B x C (x K) selection weights; validates labels.
template <typename T>
Tensor<T> one_hot(const Labels& labels, std::size_t classes);

}  // namespace pinsar::proto

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

#include "pinsar/protohead/protohead.hpp"

#include <cmath>

#include "pinsar/error.hpp"

namespace pinsar::proto {

namespace {

void check_labels(const Labels& labels, std::size_t batch, std::size_t classes) {
  if (labels.size() != batch) {
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for a batch of " + std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ContractError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

double default_lambda(std::size_t dim) { return dim <= 3 ? 1.0 : 3.0 / static_cast<double>(dim); }

template <typename T>
PrototypeBank<T>::PrototypeBank(std::size_t c, std::size_t k, std::size_t d, double g, double l, std::mt19937_64& rng)
    : gamma(g), lambda(l) {
  if (c < 2 || k < 1 || d < 1) throw ConfigError("prototype bank needs C >= 2, K >= 1, d >= 1");
  prototypes = Tensor<T>::from({c, k, d}, ad::normal_values<T>(c * k * d, 1.0, rng), true);
  validate();
}

template <typename T>
void PrototypeBank<T>::validate() const {
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  if (!(lambda >= 0)) throw ConfigError("lambda must be non-negative");
  for (T v : prototypes.data())
    if (!std::isfinite(static_cast<double>(v))) throw NumericalError("non-finite prototype value");
}

std::string to_string(ProjectionMode mode) { return mode == ProjectionMode::mlp3 ? "mlp3" : "linear"; }

ProjectionMode projection_mode_from_string(const std::string& name) {
  if (name == "linear") return ProjectionMode::linear;
  if (name == "mlp3") return ProjectionMode::mlp3;
  throw ConfigError("unknown projection '" + name + "' (expected linear or mlp3)");
}

template <typename T>
Projection<T>::Projection(ProjectionMode m, std::size_t in, std::size_t dim, std::mt19937_64& rng) : mode(m) {
  if (mode == ProjectionMode::linear) {
    layers.emplace_back(in, dim, rng);
  } else {
    layers.emplace_back(in, kMlpHidden1, rng);
    layers.emplace_back(kMlpHidden1, kMlpHidden2, rng);
    layers.emplace_back(kMlpHidden2, dim, rng);
  }
}

template <typename T>
Tensor<T> Projection<T>::operator()(const Tensor<T>& features) const {
  Tensor<T> h = features;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = ad::gelu(h);
  }
  return h;
}

template <typename T>
void Projection<T>::collect(const std::string& prefix, ParameterList<T>& out) const {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "." + std::to_string(i), out);
}

template <typename T>
ParameterList<T> Projection<T>::parameters() const {
  ParameterList<T> out;
  collect("projection", out);
  return out;
}

template <typename T>
Tensor<T> distances(const Tensor<T>& z, const PrototypeBank<T>& bank) {
  const std::size_t c = bank.classes(), k = bank.per_class(), d = bank.dim();
  if (z.rank() != 2 || z.dim(1) != d) {
    throw DimensionError("distances: features " + ad::to_string(z.shape()) + " vs prototypes " +
                         ad::to_string(bank.prototypes.shape()));
  }
  const auto flat = ad::reshape(bank.prototypes, {c * k, d});
  return ad::reshape(ad::squared_distances(z, flat), {z.dim(0), c, k});
}

template <typename T>
Tensor<T> prototype_probabilities(const Tensor<T>& dist, double gamma) {
  const std::size_t b = dist.dim(0);
  const auto logits = ad::scale(ad::reshape(dist, {b, dist.numel() / b}), static_cast<T>(-gamma));
  return ad::reshape(ad::softmax(logits, 1), dist.shape());
}

template <typename T>
Tensor<T> class_probability(const Tensor<T>& proto_probs) {
  return ad::sum_axis(proto_probs, 2);
}

template <typename T>
Tensor<T> log_class_probability(const Tensor<T>& dist, double gamma) {
  const std::size_t b = dist.dim(0);
  const auto logits = ad::scale(dist, static_cast<T>(-gamma));                        // B x C x K
  const auto per_class = ad::logsumexp(logits, 2);                                    // B x C
  const auto total = ad::logsumexp(ad::reshape(logits, {b, dist.numel() / b}), 1, true);  // B x 1
  return ad::sub(per_class, total);
}

template <typename T>
Tensor<T> one_hot(const Labels& labels, std::size_t classes) {
  std::vector<T> v(labels.size() * classes, T(0));
  for (std::size_t i = 0; i < labels.size(); ++i) v[i * classes + static_cast<std::size_t>(labels[i])] = T(1);
  return Tensor<T>::from({labels.size(), classes}, std::move(v));
}

template <typename T>
Tensor<T> dce_loss(const Tensor<T>& dist, const Labels& labels, double gamma) {
  check_labels(labels, dist.dim(0), dist.dim(1));
  const auto logp = log_class_probability(dist, gamma);
  const T inv_b = T(-1) / static_cast<T>(labels.size());
  return ad::scale(ad::sum(ad::mul(logp, one_hot<T>(labels, dist.dim(1)))), inv_b);
}

template <typename T>
Tensor<T> dce_loss_from_probabilities(const Tensor<T>& class_probs, const Labels& labels) {
  check_labels(labels, class_probs.dim(0), class_probs.dim(1));
  const T inv_b = T(-1) / static_cast<T>(labels.size());
  return ad::scale(ad::sum(ad::mul(ad::log(class_probs), one_hot<T>(labels, class_probs.dim(1)))), inv_b);
}

template <typename T>
Tensor<T> pl_loss(const Tensor<T>& dist, const Labels& labels) {
  const std::size_t b = dist.dim(0), c = dist.dim(1), k = dist.dim(2);
  check_labels(labels, b, c);
  // Assignment to the nearest correct-class prototype is a selection, not differentiated.
  std::vector<T> mask(b * c * k, T(0));
  const auto& dv = dist.data();
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t y = static_cast<std::size_t>(labels[i]);
    const T* row = dv.data() + (i * c + y) * k;
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (row[j] < row[best]) best = j;
    mask[(i * c + y) * k + best] = T(1);
  }
  const auto sel = Tensor<T>::from(dist.shape(), std::move(mask));
  return ad::scale(ad::sum(ad::mul(dist, sel)), T(1) / static_cast<T>(b));
}

template <typename T>
Tensor<T> combined_loss(const Tensor<T>& z, const Labels& labels, const PrototypeBank<T>& bank) {
  const auto dist = distances(z, bank);
  const auto dce = dce_loss(dist, labels, bank.gamma);
  if (bank.lambda == 0.0) return dce;
  return ad::add(dce, ad::scale(pl_loss(dist, labels), static_cast<T>(bank.lambda)));
}

template <typename T>
Labels classify_nearest(const Tensor<T>& z, const PrototypeBank<T>& bank) {
  ad::NoGradGuard no_grad;
  const auto dist = distances(z, bank);
  const std::size_t b = dist.dim(0), ck = bank.classes() * bank.per_class();
  const auto& dv = dist.data();
  Labels out(b);
  for (std::size_t i = 0; i < b; ++i) {
    const T* row = dv.data() + i * ck;
    std::size_t best = 0;
    for (std::size_t j = 1; j < ck; ++j)
      if (row[j] < row[best]) best = j;
    out[i] = static_cast<int>(best / bank.per_class());
  }
  return out;
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, const Labels& labels) {
  if (logits.rank() != 2) throw DimensionError("softmax_cross_entropy expects B x C logits");
  check_labels(labels, logits.dim(0), logits.dim(1));
  const T inv_b = T(-1) / static_cast<T>(labels.size());
  return ad::scale(ad::sum(ad::mul(ad::log_softmax(logits, 1), one_hot<T>(labels, logits.dim(1)))), inv_b);
}

template <typename T>
Labels argmax_rows(const Tensor<T>& scores) {
  const std::size_t b = scores.dim(0), c = scores.dim(1);
  Labels out(b);
  for (std::size_t i = 0; i < b; ++i) {
    const T* row = scores.data().data() + i * c;
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (row[j] > row[best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

#define PINSAR_INSTANTIATE_PROTO(T)                                                      \
  template class PrototypeBank<T>;                                                       \
  template class Projection<T>;                                                          \
  template Tensor<T> distances(const Tensor<T>&, const PrototypeBank<T>&);               \
  template Tensor<T> prototype_probabilities(const Tensor<T>&, double);                  \
  template Tensor<T> class_probability(const Tensor<T>&);                                \
  template Tensor<T> log_class_probability(const Tensor<T>&, double);                    \
  template Tensor<T> one_hot<T>(const Labels&, std::size_t);                             \
  template Tensor<T> dce_loss(const Tensor<T>&, const Labels&, double);                  \
  template Tensor<T> dce_loss_from_probabilities(const Tensor<T>&, const Labels&);       \
  template Tensor<T> pl_loss(const Tensor<T>&, const Labels&);                           \
  template Tensor<T> combined_loss(const Tensor<T>&, const Labels&, const PrototypeBank<T>&); \
  template Labels classify_nearest(const Tensor<T>&, const PrototypeBank<T>&);           \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, const Labels&);             \
  template Labels argmax_rows(const Tensor<T>&);

PINSAR_INSTANTIATE_PROTO(float)
PINSAR_INSTANTIATE_PROTO(double)

}  // namespace pinsar::proto

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

#include "pinsar/autodiff/optim.hpp"

#include <cmath>
#include <numbers>

namespace pinsar::ad {

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double lr_min) {
  if (total_steps == 0) return lr0;
  if (step >= total_steps) return lr_min;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adamw ? "adamw" : "sgd"; }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "adamw") return OptimizerKind::adamw;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adamw or sgd)");
}

template <typename T>
Optimizer<T>::Optimizer(std::vector<Tensor<T>> params, OptimizerConfig config, CosineSchedule schedule)
    : params_(std::move(params)), config_(config), schedule_(schedule) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (config_.kind == OptimizerKind::adamw || config_.momentum != 0.0) m_[i].assign(params_[i].numel(), T(0));
    if (config_.kind == OptimizerKind::adamw) v_[i].assign(params_[i].numel(), T(0));
  }
}

template <typename T>
void Optimizer<T>::step() {
  step_with_lr(current_lr());
}

template <typename T>
void Optimizer<T>::step_with_lr(double lr) {
  ++steps_;
  const T lr_t = static_cast<T>(lr);
  const T wd = static_cast<T>(config_.weight_decay);
  if (config_.kind == OptimizerKind::adamw) {
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T eps = static_cast<T>(config_.eps);
    const T c1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(steps_)));
    const T c2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(steps_)));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<T>& p = params_[i];
      if (!p.requires_grad() || !p.has_grad()) continue;
      auto w = p.mutable_data();
      auto g = p.grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = b1 * m[j] + (T(1) - b1) * g[j];
        v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
        const T update = (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
        w[j] -= lr_t * (update + wd * w[j]);
      }
    }
    return;
  }
  const T mom = static_cast<T>(config_.momentum);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor<T>& p = params_[i];
    if (!p.requires_grad() || !p.has_grad()) continue;
    auto w = p.mutable_data();
    auto g = p.grad();
    for (std::size_t j = 0; j < w.size(); ++j) {
      T d = g[j] + wd * w[j];
      if (!m_[i].empty()) {
        m_[i][j] = mom * m_[i][j] + d;
        d = m_[i][j];
      }
      w[j] -= lr_t * d;
    }
  }
}

template <typename T>
void Optimizer<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace pinsar::ad

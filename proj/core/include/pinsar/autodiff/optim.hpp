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
#include <string>
#include <vector>

#include "pinsar/autodiff/tensor.hpp"

namespace pinsar::ad {

/// lr_min + (lr0 - lr_min) * (1 + cos(pi * step / total_steps)) / 2.
/// Steps past total_steps clamp to lr_min; total_steps == 0 yields lr0.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double lr_min);

struct CosineSchedule {
  double lr0 = 1e-4;
  double lr_min = 0.0;
  std::size_t total_steps = 0;

  double at(std::size_t step) const { return cosine_lr(step, total_steps, lr0, lr_min); }
};

enum class OptimizerKind { adamw, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adamw;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled for AdamW, L2-coupled for SGD.
  double weight_decay = 1e-4;
  double momentum = 0.0;
};

/// First-order optimizer over a fixed parameter list, driven by a cosine schedule.
template <typename T>
class Optimizer {
 public:
  Optimizer(std::vector<Tensor<T>> params, OptimizerConfig config, CosineSchedule schedule);

  /// Applies one update at the schedule's current learning rate and advances it.
  void step();
  /// Applies one update at an explicit learning rate (does not consult the schedule).
  void step_with_lr(double lr);
  void zero_grad();

  double current_lr() const { return schedule_.at(steps_); }
  std::size_t steps() const { return steps_; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }
  const CosineSchedule& schedule() const { return schedule_; }

 private:
  std::vector<Tensor<T>> params_;
  OptimizerConfig config_;
  CosineSchedule schedule_;
  std::size_t steps_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

}  // namespace pinsar::ad

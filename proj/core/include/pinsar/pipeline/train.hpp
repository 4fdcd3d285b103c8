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
#include <functional>
#include <string>
#include <vector>

#include "pinsar/pipeline/model.hpp"

namespace pinsar::pipeline {

using Batches = std::vector<std::vector<std::size_t>>;

/// One epoch of class-balanced batches: ceil(B/2) from the majority class and
/// floor(B/2) from the minority, each class walked through seeded permutations.
/// The majority class is seen exactly once; the minority class is recycled.
Batches oversample_batches(const std::vector<int>& labels, std::size_t batch_size, std::uint64_t seed);

/// Shuffled batches without rebalancing; the last batch may be short.
Batches shuffled_batches(std::size_t count, std::size_t batch_size, std::uint64_t seed);

struct EvalReport {
  std::string domain;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::string fingerprint;

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;  // percent
  std::string to_text() const;
  bool operator==(const EvalReport&) const = default;
};

/// Confusion counts with class 1 (deformation) as positive.
EvalReport make_report(const std::vector<int>& truth, const std::vector<int>& predicted, std::string domain = {},
                       std::string fingerprint = {});

struct TrainLog {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;      // mean over the epoch's steps
  std::vector<double> epoch_val_acc;   // when a validation set is given
  std::size_t steps = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs epochs_s epochs on the model's trainable parameters (combined loss or
/// cross-entropy per head), with per-step cosine annealing. Throws NumericalError
/// on a non-finite loss.
TrainLog train(Model& model, const syngen::Dataset& data, const std::vector<int>& labels,
               const syngen::Dataset* validation = nullptr, const ProgressFn& progress = {});
TrainLog train(Model& model, const syngen::Dataset& data, const syngen::Dataset* validation = nullptr,
               const ProgressFn& progress = {});

/// Head outputs (prototype coordinates or logits) for every sample, batched, without gradients.
Tensor head_outputs(const Model& model, const syngen::Dataset& data, std::size_t batch = 100);
Tensor encoder_features(const Model& model, const syngen::Dataset& data, std::size_t batch = 100);

std::vector<int> predict(const Model& model, const syngen::Dataset& data);
EvalReport evaluate(const Model& model, const syngen::Dataset& data, const std::string& domain = {});

std::vector<int> dataset_labels(const syngen::Dataset& data);

}  // namespace pinsar::pipeline

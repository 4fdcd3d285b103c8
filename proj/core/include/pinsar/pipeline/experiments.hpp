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

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pinsar/adapt/adapt.hpp"
#include "pinsar/pipeline/train.hpp"

namespace pinsar::pipeline {

struct DistillResult {
  std::unique_ptr<Model> student;
  EvalReport report;
  adapt::PseudoLabeledSet pseudo;
  TrainLog log;
};

/// Student config derived from the run config: tiny_cnn, softmax head, no weight decay.
TrainConfig distillation_config(TrainConfig base);

/// Pseudo-labels `unlabeled_target` with the teacher, trains a fresh tiny_cnn on
/// those labels only and evaluates it on `target_test`.
DistillResult distill_to_cnn(const Model& teacher, const syngen::Dataset& unlabeled_target,
                             const syngen::Dataset& target_test, const TrainConfig& config,
                             const ProgressFn& progress = {});
/// Same student recipe trained on explicit labels (oracle control, supervised baselines).
/// An empty `target_test` skips the evaluation.
DistillResult train_student(const syngen::Dataset& data, const std::vector<int>& labels,
                            const syngen::Dataset& target_test, const TrainConfig& student_config,
                            const ProgressFn& progress = {});

/// CSV: sample_id,label,pred,z0..z{d-1}, then one `proto,<class>,<class>,coords` row per prototype.
void export_protospace(const Model& model, const syngen::Dataset& data, std::ostream& os);

/// Sample ids with their distance to the class's nearest prototype, ascending (ties by id).
std::vector<std::pair<std::size_t, double>> nearest_to_prototype(const Model& model, const syngen::Dataset& data,
                                                                 int cls);

/// Last-layer attention from each window's central token, long-form CSV
/// `head,window,row,col,weight` with row/col in the final token grid.
void export_attention(const Model& model, const std::vector<float>& phase, std::ostream& os);

/// Fixed-precision number formatting shared by the CSV exports.
std::string csv_number(double v);

}  // namespace pinsar::pipeline

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
#include <string>
#include <vector>

#include "pinsar/pipeline/model.hpp"
#include "pinsar/pipeline/train.hpp"

// Self-labeling adaptation: pseudo-label the target domain, freeze the encoder
// and prototypes, retrain a fresh non-linear projection.
namespace pinsar::adapt {

using pipeline::Model;

struct PseudoLabeledSet {
  std::vector<int> labels;
  std::vector<float> confidence;  // max class probability
  std::string source_model_id;

  std::size_t size() const { return labels.size(); }
};

/// Nearest-prototype labels of the model on every sample; requires a trained model.
PseudoLabeledSet generate_pseudo_labels(const Model& model, const syngen::Dataset& target);

/// Freezes encoder and bank, installs a freshly initialized mlp3 projection seeded from the config.
void freeze_for_adaptation(Model& model);

/// Trains the projection for epochs_p epochs at lr_p on cached encoder features.
pipeline::TrainLog train_projection(Model& model, const syngen::Dataset& target, const PseudoLabeledSet& pseudo,
                                    const pipeline::ProgressFn& progress = {});

/// Dataset container with the label flag set plus a manifest carrying the model id and confidences.
void write_pseudo_labels(const std::string& path, const syngen::Dataset& target, const PseudoLabeledSet& pseudo);
PseudoLabeledSet read_pseudo_labels(const std::string& path, syngen::Dataset* samples = nullptr);

}  // namespace pinsar::adapt

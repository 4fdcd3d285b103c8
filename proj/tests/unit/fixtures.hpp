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

#include <memory>
#include <string>
#include <vector>

#include "pinsar/pipeline/model.hpp"
#include "pinsar/pipeline/train.hpp"
#include "pinsar/syngen/dataset.hpp"

// Small shared datasets and a quickly trained CNN model for pipeline-level tests.
namespace pinsar::testing {

inline const syngen::Dataset& small_source() {
  static const auto d = syngen::generate_dataset(24, 24, syngen::DomainProfile::source, 11);
  return d;
}

inline const syngen::Dataset& small_target() {
  static const auto d = syngen::generate_dataset(16, 16, syngen::DomainProfile::target, 12);
  return d;
}

inline pipeline::TrainConfig small_config(pipeline::HeadKind head = pipeline::HeadKind::prototype) {
  pipeline::TrainConfig c;
  c.encoder = encoder::EncoderKind::tiny_cnn;
  c.head = head;
  c.batch_size = 8;
  c.epochs_s = 1;
  c.epochs_p = 1;
  c.lr0 = 1e-3;
  c.lr_p = 1e-3;
  c.seed = 5;
  return c;
}

inline std::unique_ptr<pipeline::Model> trained_small_model(pipeline::HeadKind head = pipeline::HeadKind::prototype) {
  auto m = std::make_unique<pipeline::Model>(small_config(head));
  pipeline::train(*m, small_source());
  return m;
}

inline std::vector<std::vector<float>> snapshot(const ad::ParameterList<float>& params) {
  std::vector<std::vector<float>> out;
  for (const auto& p : params) out.push_back(p.tensor.values());
  return out;
}

}  // namespace pinsar::testing

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

#include "pinsar/encoder/encoder.hpp"
#include "pinsar/pipeline/config.hpp"
#include "pinsar/protohead/protohead.hpp"
#include "pinsar/syngen/dataset.hpp"

namespace pinsar::pipeline {

using Tensor = ad::Tensor<float>;
using ParameterList = ad::ParameterList<float>;

enum class ModelStage { untrained, trained, adapted };
std::string to_string(ModelStage stage);
ModelStage model_stage_from_string(const std::string& name);

/// Encoder plus either a prototype head (projection + bank) or a softmax classifier.
class Model {
 public:
  explicit Model(const TrainConfig& config, proto::ProjectionMode projection = proto::ProjectionMode::linear);

  const TrainConfig& config() const { return config_; }
  ModelStage stage() const { return stage_; }
  void set_stage(ModelStage s) { stage_ = s; }
  /// Replaces optimization settings (epochs, rates, batching, seed). Fields that
  /// shape the parameters (encoder, encoding, head, dimensions, gamma, lambda) must match.
  void update_training_options(const TrainConfig& updated);
  proto::ProjectionMode projection_mode() const { return projection_.mode; }
  bool is_prototype() const { return config_.head == HeadKind::prototype; }

  const encoder::Encoder<float>& encoder() const { return *encoder_; }
  const proto::Projection<float>& projection() const { return projection_; }
  const proto::PrototypeBank<float>& bank() const { return bank_; }
  const ad::Linear<float>& classifier() const { return classifier_; }

  Tensor features(const Tensor& x) const { return encoder_->forward(x); }
  /// Prototype-space coordinates (prototype head) or class logits (softmax head) from encoder features.
  Tensor head(const Tensor& features) const;
  Tensor loss(const Tensor& head_out, const proto::Labels& labels) const;
  proto::Labels predict_from_head(const Tensor& head_out) const;
  /// Max class probability per sample.
  std::vector<float> confidence_from_head(const Tensor& head_out) const;

  /// All parameters with stable names, in a fixed order.
  ParameterList parameters() const;
  ParameterList trainable_parameters() const;

  /// Replaces the projection with a fresh mlp3 and freezes everything else.
  void install_adaptation_projection(std::uint64_t seed);

  /// Configuration text stored in checkpoints (training config plus model state keys).
  std::string config_text() const;
  std::uint64_t fingerprint() const;

 private:
  TrainConfig config_;
  ModelStage stage_ = ModelStage::untrained;
  std::unique_ptr<encoder::Encoder<float>> encoder_;
  proto::Projection<float> projection_;
  proto::PrototypeBank<float> bank_;
  ad::Linear<float> classifier_;
};

/// Encodes the selected samples into a B x C x H x W batch.
Tensor make_batch(const syngen::Dataset& data, const std::vector<std::size_t>& indices,
                  encoder::InputEncoding encoding);

// Checkpoint container: "PINSCKPT", u32 version, u64 fingerprint, u32-length config text,
// u32 record count, then per record u32 name length + name, u32 rank, u32 dims, float32 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& os, const Model& model);
void save_checkpoint(const std::string& path, const Model& model);
std::string serialize_checkpoint(const Model& model);
std::unique_ptr<Model> load_checkpoint(std::istream& is, const std::string& origin = "checkpoint");
std::unique_ptr<Model> load_checkpoint(const std::string& path);
/// Identity of a checkpoint's exact bytes, as 16 hex digits.
std::string checkpoint_id(const Model& model);

}  // namespace pinsar::pipeline

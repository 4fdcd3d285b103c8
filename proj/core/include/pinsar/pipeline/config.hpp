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
#include <map>
#include <string>

#include "pinsar/autodiff/optim.hpp"
#include "pinsar/encoder/encoder.hpp"

namespace pinsar::pipeline {

enum class HeadKind { prototype, softmax };
std::string to_string(HeadKind head);
HeadKind head_kind_from_string(const std::string& name);

/// Every hyperparameter of a run. Serialized as sorted key=value lines.
struct TrainConfig {
  encoder::EncoderKind encoder = encoder::EncoderKind::tiny_swin;
  encoder::InputEncoding encoding = encoder::InputEncoding::scaled_phase;
  HeadKind head = HeadKind::prototype;
  std::size_t proto_dim = 3;
  std::size_t protos_per_class = 1;
  double gamma = 1.0;
  double lambda = -1.0;  // negative: derive from proto_dim
  std::size_t epochs_s = 5;
  std::size_t epochs_p = 5;
  std::size_t batch_size = 40;
  double lr0 = 1e-4;
  double lr_min = 0.0;
  double lr_p = 1e-3;  // pseudo stage
  double weight_decay = 1e-4;
  ad::OptimizerKind optimizer = ad::OptimizerKind::adamw;
  double momentum = 0.0;
  bool oversample = true;
  std::uint64_t seed = 0;

  void validate() const;
  double effective_lambda() const;
  encoder::EncoderConfig encoder_config() const;

  /// Sets one key from its text form; unknown keys and bad values raise ConfigError.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
  /// Canonical form: sorted key=value lines, newline terminated.
  std::string canonical_text() const;
};

/// Parses key=value lines ('#' comments and blank lines ignored) on top of `base`.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config_file(const std::string& path, TrainConfig base = {});

/// Splits "key=value" text into ordered pairs.
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin);

}  // namespace pinsar::pipeline

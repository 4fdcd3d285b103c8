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
#include <optional>
#include <string>
#include <vector>

namespace pinsar::cli {

struct GenerateArgs {
  std::size_t pos = 1440;
  std::size_t neg = 560;
  std::string profile = "source";
  std::uint64_t seed = 0;
  std::string out;
};

// Settings shared by every command that builds or retrains a model: a config
// file, then explicit flags and --set overrides, in that order.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> encoder, head;
  std::optional<std::size_t> proto_dim, epochs, epochs_p;
  std::optional<std::uint64_t> seed;
};

struct TrainArgs {
  ConfigArgs config;
  std::string data, validation, out;
};

struct AdaptArgs {
  ConfigArgs config;
  std::string checkpoint, target, out, pseudo_out, validation;
};

struct EvalArgs {
  std::string checkpoint, data, domain, out;
};

struct DistillArgs {
  ConfigArgs config;
  std::string teacher, target, test, out, report_out;
};

struct ExportArgs {
  std::string checkpoint, data, out;
  std::size_t index = 0;
  int cls = 1;
  std::size_t top = 0;
};

int run_generate(const GenerateArgs& a);
int run_train(const TrainArgs& a);
int run_adapt(const AdaptArgs& a);
int run_eval(const EvalArgs& a);
int run_distill(const DistillArgs& a);
int run_export_protospace(const ExportArgs& a);
int run_export_attention(const ExportArgs& a);
int run_nearest(const ExportArgs& a);

}  // namespace pinsar::cli

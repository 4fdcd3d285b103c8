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

#include "commands.hpp"

#include <fstream>
#include <functional>
#include <iostream>

#include "pinsar/adapt/adapt.hpp"
#include "pinsar/error.hpp"
#include "pinsar/format.hpp"
#include "pinsar/pipeline/experiments.hpp"

namespace pinsar::cli {

namespace {

void log(const std::string& line) { std::cerr << line << std::endl; }

pipeline::TrainConfig resolve(const ConfigArgs& a, pipeline::TrainConfig base) {
  if (!a.config_path.empty()) base = pipeline::load_config_file(a.config_path, base);
  if (a.encoder) base.set("encoder", *a.encoder);
  if (a.head) base.set("head", *a.head);
  if (a.proto_dim) base.proto_dim = *a.proto_dim;
  if (a.epochs) base.epochs_s = *a.epochs;
  if (a.epochs_p) base.epochs_p = *a.epochs_p;
  if (a.seed) base.seed = *a.seed;
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    base.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  base.validate();
  return base;
}

// Writes to the named file, or stdout when the path is empty or "-".
void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  body(os);
  if (!os) throw DataError("failed writing " + path);
}

std::unique_ptr<syngen::Dataset> load_optional(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_unique<syngen::Dataset>(syngen::read_dataset(path));
}

}  // namespace

int run_generate(const GenerateArgs& a) {
  const auto profile = syngen::domain_profile_from_string(a.profile);
  const auto data = syngen::generate_dataset(a.pos, a.neg, profile, a.seed);
  syngen::write_dataset(a.out, data);
  log("wrote " + std::to_string(data.size()) + " " + a.profile + " samples to " + a.out);
  return 0;
}

int run_train(const TrainArgs& a) {
  const auto config = resolve(a.config, {});
  const auto data = syngen::read_dataset(a.data);
  const auto validation = load_optional(a.validation);
  pipeline::Model model(config);
  pipeline::train(model, data, validation.get(), log);
  pipeline::save_checkpoint(a.out, model);
  log("checkpoint " + pipeline::checkpoint_id(model) + " written to " + a.out);
  if (validation) std::cout << pipeline::evaluate(model, *validation, "source").to_text();
  return 0;
}

int run_adapt(const AdaptArgs& a) {
  auto model = pipeline::load_checkpoint(a.checkpoint);
  const auto options = resolve(a.config, model->config());
  const auto target = syngen::read_dataset(a.target);
  const auto validation = load_optional(a.validation);
  std::optional<pipeline::EvalReport> before;
  if (validation) before = pipeline::evaluate(*model, *validation, "source");

  // Labels are attributed to the checkpoint exactly as loaded.
  const auto pseudo = adapt::generate_pseudo_labels(*model, target);
  model->update_training_options(options);
  if (!a.pseudo_out.empty()) adapt::write_pseudo_labels(a.pseudo_out, target, pseudo);
  const auto positives = std::count(pseudo.labels.begin(), pseudo.labels.end(), 1);
  log("pseudo-labeled " + std::to_string(pseudo.size()) + " samples (" + std::to_string(positives) +
      " positive) with model " + pseudo.source_model_id);
  adapt::freeze_for_adaptation(*model);
  adapt::train_projection(*model, target, pseudo, log);
  pipeline::save_checkpoint(a.out, *model);
  log("adapted checkpoint " + pipeline::checkpoint_id(*model) + " written to " + a.out);
  if (validation) {
    const auto after = pipeline::evaluate(*model, *validation, "source");
    log("source accuracy " + format_number(before->accuracy()) + " -> " + format_number(after.accuracy()));
    std::cout << after.to_text();
  }
  return 0;
}

int run_eval(const EvalArgs& a) {
  const auto model = pipeline::load_checkpoint(a.checkpoint);
  const auto data = syngen::read_dataset(a.data);
  const auto report = pipeline::evaluate(*model, data, a.domain);
  with_output(a.out, [&](std::ostream& os) { os << report.to_text(); });
  return 0;
}

int run_distill(const DistillArgs& a) {
  const auto teacher = pipeline::load_checkpoint(a.teacher);
  const auto config = resolve(a.config, teacher->config());
  const auto target = syngen::read_dataset(a.target);
  const auto test = a.test.empty() ? syngen::Dataset{} : syngen::read_dataset(a.test);
  auto pseudo = adapt::generate_pseudo_labels(*teacher, target);
  auto result = pipeline::train_student(target, pseudo.labels, test, pipeline::distillation_config(config), log);
  pipeline::save_checkpoint(a.out, *result.student);
  log("student checkpoint " + pipeline::checkpoint_id(*result.student) + " written to " + a.out);
  if (!a.test.empty()) with_output(a.report_out, [&](std::ostream& os) { os << result.report.to_text(); });
  return 0;
}

int run_export_protospace(const ExportArgs& a) {
  const auto model = pipeline::load_checkpoint(a.checkpoint);
  const auto data = syngen::read_dataset(a.data);
  with_output(a.out, [&](std::ostream& os) { pipeline::export_protospace(*model, data, os); });
  return 0;
}

int run_export_attention(const ExportArgs& a) {
  const auto model = pipeline::load_checkpoint(a.checkpoint);
  const auto data = syngen::read_dataset(a.data);
  if (a.index >= data.size()) {
    throw ConfigError("--index " + std::to_string(a.index) + " outside the dataset of " + std::to_string(data.size()));
  }
  with_output(a.out, [&](std::ostream& os) { pipeline::export_attention(*model, data.samples[a.index].phase, os); });
  return 0;
}

int run_nearest(const ExportArgs& a) {
  const auto model = pipeline::load_checkpoint(a.checkpoint);
  const auto data = syngen::read_dataset(a.data);
  auto ranked = pipeline::nearest_to_prototype(*model, data, a.cls);
  if (a.top > 0 && ranked.size() > a.top) ranked.resize(a.top);
  with_output(a.out, [&](std::ostream& os) {
    os << "rank,sample_id,label,distance\n";
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const auto& [id, dist] = ranked[r];
      os << r << ',' << id << ',';
      if (data.labeled) os << static_cast<int>(data.samples[id].label);
      os << ',' << pipeline::csv_number(dist) << '\n';
    }
  });
  return 0;
}

}  // namespace pinsar::cli

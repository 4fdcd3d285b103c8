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

#include "pinsar/adapt/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pinsar/error.hpp"
#include "pinsar/format.hpp"
#include "pinsar/syngen/seed.hpp"

namespace pinsar::adapt {

namespace {

enum Salt : std::uint64_t { kMlpInit = 3, kPseudoBatches = 0x9a };

pipeline::Tensor gather_rows(const pipeline::Tensor& features, const std::vector<std::size_t>& rows) {
  const std::size_t f = features.dim(1);
  std::vector<float> v(rows.size() * f);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(features.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * f), f, v.begin() + static_cast<std::ptrdiff_t>(i * f));
  }
  return pipeline::Tensor::from({rows.size(), f}, std::move(v));
}

}  // namespace

PseudoLabeledSet generate_pseudo_labels(const Model& model, const syngen::Dataset& target) {
  if (model.stage() == pipeline::ModelStage::untrained) {
    throw ContractError("pseudo-labels need a trained model; this checkpoint is untrained");
  }
  if (!model.is_prototype()) throw ContractError("pseudo-labeling uses nearest-prototype decisions; softmax head given");
  PseudoLabeledSet out;
  out.source_model_id = pipeline::checkpoint_id(model);
  if (target.size() == 0) return out;
  const auto z = pipeline::head_outputs(model, target);
  out.labels = model.predict_from_head(z);
  out.confidence = model.confidence_from_head(z);
  return out;
}

void freeze_for_adaptation(Model& model) {
  model.install_adaptation_projection(syngen::derive_seed(model.config().seed, kMlpInit));
  model.set_stage(pipeline::ModelStage::adapted);
}

pipeline::TrainLog train_projection(Model& model, const syngen::Dataset& target, const PseudoLabeledSet& pseudo,
                                    const pipeline::ProgressFn& progress) {
  if (model.stage() != pipeline::ModelStage::adapted || model.projection_mode() != proto::ProjectionMode::mlp3) {
    throw ContractError("train_projection needs a model prepared by freeze_for_adaptation");
  }
  if (pseudo.size() == 0) throw ContractError("pseudo-labeled set is empty");
  if (pseudo.size() != target.size()) throw DimensionError("pseudo-label count does not match the target set");
  const auto& cfg = model.config();

  // Encoder and bank are frozen, so features are computed once.
  const auto features = pipeline::encoder_features(model, target);
  const bool both = std::count(pseudo.labels.begin(), pseudo.labels.end(), 1) > 0 &&
                    std::count(pseudo.labels.begin(), pseudo.labels.end(), 0) > 0;
  const bool balance = cfg.oversample && both;
  auto epoch_batches = [&](std::size_t epoch) {
    const std::uint64_t s = syngen::derive_seed(syngen::derive_seed(cfg.seed, kPseudoBatches), epoch);
    return balance ? pipeline::oversample_batches(pseudo.labels, cfg.batch_size, s)
                   : pipeline::shuffled_batches(target.size(), cfg.batch_size, s);
  };
  if (cfg.oversample && !both && progress) progress("pseudo-labels hold a single class; oversampling disabled");

  std::vector<ad::Tensor<float>> params;
  for (const auto& p : model.trainable_parameters()) params.push_back(p.tensor);
  ad::OptimizerConfig oc;
  oc.kind = cfg.optimizer;
  oc.weight_decay = cfg.weight_decay;
  oc.momentum = cfg.momentum;
  const std::size_t per_epoch = epoch_batches(0).size();
  ad::Optimizer<float> opt(params, oc, {cfg.lr_p, cfg.lr_min, cfg.epochs_p * per_epoch});

  pipeline::TrainLog log;
  for (std::size_t epoch = 0; epoch < cfg.epochs_p; ++epoch) {
    double sum = 0;
    const auto batches = epoch_batches(epoch);
    for (const auto& b : batches) {
      proto::Labels y(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) y[i] = pseudo.labels[b[i]];
      auto loss = model.loss(model.head(gather_rows(features, b)), y);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite loss in the pseudo stage at step " + std::to_string(log.steps) + " (lr " +
                             format_number(opt.current_lr()) + ")");
      }
      loss.backward();
      opt.step();
      opt.zero_grad();
      log.step_loss.push_back(value);
      sum += value;
      ++log.steps;
    }
    log.epoch_loss.push_back(sum / static_cast<double>(batches.size()));
    if (progress) {
      progress("pseudo epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs_p) + " loss " +
               format_number(log.epoch_loss.back()));
    }
  }
  return log;
}

void write_pseudo_labels(const std::string& path, const syngen::Dataset& target, const PseudoLabeledSet& pseudo) {
  if (pseudo.size() != target.size()) throw DimensionError("pseudo-label count does not match the target set");
  if (pseudo.source_model_id.empty()) throw ContractError("pseudo-labels need a source model id");
  syngen::Dataset out;
  out.grid_size = target.grid_size;
  out.labeled = true;
  out.samples = target.samples;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i].label = static_cast<std::uint8_t>(pseudo.labels[i]);
  out.manifest.header = {{"format", "PINSAR01"},
                         {"kind", "pseudo_labels"},
                         {"source_model_id", pseudo.source_model_id},
                         {"count", std::to_string(out.size())}};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.manifest.samples.push_back({{"seed", std::to_string(out.samples[i].seed)},
                                    {"pseudo_label", std::to_string(pseudo.labels[i])},
                                    {"confidence", format_number(pseudo.confidence.at(i))}});
  }
  syngen::write_dataset(path, out);
}

PseudoLabeledSet read_pseudo_labels(const std::string& path, syngen::Dataset* samples) {
  syngen::Dataset ds = syngen::read_dataset(path);
  PseudoLabeledSet out;
  out.source_model_id = ds.manifest.header_value("source_model_id");
  if (out.source_model_id.empty()) throw DataError(path + ": manifest lacks source_model_id");
  if (ds.manifest.samples.size() != ds.size()) throw DataError(path + ": manifest does not cover every sample");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.labels.push_back(ds.samples[i].label);
    std::string conf;
    for (const auto& [k, v] : ds.manifest.samples[i])
      if (k == "confidence") conf = v;
    try {
      out.confidence.push_back(static_cast<float>(parse_double(conf, "confidence")));
    } catch (const ConfigError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  if (samples != nullptr) *samples = std::move(ds);
  return out;
}

}  // namespace pinsar::adapt

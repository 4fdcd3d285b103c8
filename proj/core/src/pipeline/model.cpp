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

#include "pinsar/pipeline/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pinsar/binary_io.hpp"
#include "pinsar/error.hpp"
#include "pinsar/syngen/seed.hpp"

namespace pinsar::pipeline {

namespace {

enum InitSalt : std::uint64_t { kEncoderInit = 1, kHeadInit = 2 };
constexpr char kMagic[9] = "PINSCKPT";

}  // namespace

std::string to_string(ModelStage s) {
  switch (s) {
    case ModelStage::untrained: return "untrained";
    case ModelStage::trained: return "trained";
    case ModelStage::adapted: return "adapted";
  }
  return "untrained";
}

ModelStage model_stage_from_string(const std::string& name) {
  if (name == "untrained") return ModelStage::untrained;
  if (name == "trained") return ModelStage::trained;
  if (name == "adapted") return ModelStage::adapted;
  throw DataError("unknown model stage '" + name + "'");
}

Model::Model(const TrainConfig& config, proto::ProjectionMode projection) : config_(config) {
  config_.validate();
  encoder_ = encoder::make_encoder<float>(config_.encoder_config(), syngen::derive_seed(config_.seed, kEncoderInit));
  std::mt19937_64 rng(syngen::derive_seed(config_.seed, kHeadInit));
  const std::size_t f = encoder_->output_dim();
  if (is_prototype()) {
    projection_ = proto::Projection<float>(projection, f, config_.proto_dim, rng);
    bank_ = proto::PrototypeBank<float>(2, config_.protos_per_class, config_.proto_dim, config_.gamma,
                                        config_.effective_lambda(), rng);
  } else {
    classifier_ = ad::Linear<float>(f, 2, rng);
  }
}

void Model::update_training_options(const TrainConfig& updated) {
  updated.validate();
  const bool same_shape = updated.encoder == config_.encoder && updated.encoding == config_.encoding &&
                          updated.head == config_.head && updated.proto_dim == config_.proto_dim &&
                          updated.protos_per_class == config_.protos_per_class && updated.gamma == config_.gamma &&
                          updated.effective_lambda() == config_.effective_lambda();
  if (!same_shape) {
    throw ConfigError("encoder, encoding, head, proto_dim, protos_per_class, gamma and lambda are fixed by the checkpoint");
  }
  config_ = updated;
}

Tensor Model::head(const Tensor& features) const {
  return is_prototype() ? projection_(features) : classifier_(features);
}

Tensor Model::loss(const Tensor& out, const proto::Labels& labels) const {
  return is_prototype() ? proto::combined_loss(out, labels, bank_) : proto::softmax_cross_entropy(out, labels);
}

proto::Labels Model::predict_from_head(const Tensor& out) const {
  return is_prototype() ? proto::classify_nearest(out, bank_) : proto::argmax_rows(out);
}

std::vector<float> Model::confidence_from_head(const Tensor& out) const {
  ad::NoGradGuard no_grad;
  const Tensor p = is_prototype() ? proto::class_probability(proto::prototype_probabilities(proto::distances(out, bank_), bank_.gamma))
                                  : ad::softmax(out, 1);
  const std::size_t b = p.dim(0), c = p.dim(1);
  std::vector<float> conf(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = p.data().subspan(i * c, c);
    conf[i] = *std::max_element(row.begin(), row.end());
  }
  return conf;
}

ParameterList Model::parameters() const {
  ParameterList out;
  for (auto& p : encoder_->parameters()) out.push_back({"encoder." + p.name, p.tensor});
  if (is_prototype()) {
    projection_.collect("projection", out);
    bank_.collect("bank", out);
  } else {
    classifier_.collect("classifier", out);
  }
  return out;
}

ParameterList Model::trainable_parameters() const {
  ParameterList out;
  for (auto& p : parameters())
    if (p.tensor.requires_grad()) out.push_back(p);
  return out;
}

void Model::install_adaptation_projection(std::uint64_t seed) {
  if (!is_prototype()) throw ContractError("adaptation needs a prototype-head model");
  ad::set_trainable(encoder_->parameters(), false);
  ad::ParameterList<float> bank_params;
  bank_.collect("bank", bank_params);
  ad::set_trainable(bank_params, false);
  std::mt19937_64 rng(seed);
  projection_ = proto::Projection<float>(proto::ProjectionMode::mlp3, encoder_->output_dim(), config_.proto_dim, rng);
}

std::string Model::config_text() const {
  return config_.canonical_text() + "model.projection=" + proto::to_string(projection_.mode) +
         "\nmodel.stage=" + to_string(stage_) + "\n";
}

std::uint64_t Model::fingerprint() const { return io::fnv1a64(config_text()); }

Tensor make_batch(const syngen::Dataset& data, const std::vector<std::size_t>& indices,
                  encoder::InputEncoding encoding) {
  std::vector<const float*> images;
  images.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.size()) throw ContractError("sample index " + std::to_string(i) + " out of range");
    images.push_back(data.samples[i].phase.data());
  }
  return encoder::encode_batch<float>(images, data.grid_size, encoding);
}

void save_checkpoint(std::ostream& os, const Model& model) {
  const std::string text = model.config_text();
  io::write_magic(os, kMagic);
  io::write_le<std::uint32_t>(os, kCheckpointVersion);
  io::write_le<std::uint64_t>(os, io::fnv1a64(text));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto params = model.parameters();
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (float v : p.tensor.data()) io::write_le<float>(os, v);
  }
  if (!os) throw DataError("checkpoint write failed");
}

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  save_checkpoint(os, model);
}

std::string serialize_checkpoint(const Model& model) {
  std::ostringstream os(std::ios::binary);
  save_checkpoint(os, model);
  return os.str();
}

std::string checkpoint_id(const Model& model) { return io::hex64(io::fnv1a64(serialize_checkpoint(model))); }

std::unique_ptr<Model> load_checkpoint(std::istream& is, const std::string& origin) {
  io::expect_magic(is, kMagic, origin);
  const auto version = io::read_le<std::uint32_t>(is, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw DataError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto fingerprint = io::read_le<std::uint64_t>(is, "config fingerprint");
  const auto text_len = io::read_le<std::uint32_t>(is, "config length");
  if (text_len > (1u << 20)) throw DataError(origin + ": implausible config length");
  std::string text(text_len, '\0');
  if (!is.read(text.data(), text_len)) throw DataError(origin + ": truncated config text");
  if (io::fnv1a64(text) != fingerprint) throw DataError(origin + ": config fingerprint mismatch");

  TrainConfig config;
  proto::ProjectionMode projection = proto::ProjectionMode::linear;
  ModelStage stage = ModelStage::untrained;
  try {
    for (const auto& [k, v] : parse_key_values(text, origin)) {
      if (k == "model.projection") projection = proto::projection_mode_from_string(v);
      else if (k == "model.stage") stage = model_stage_from_string(v);
      else config.set(k, v);
    }
  } catch (const ConfigError& e) {
    throw DataError(origin + ": invalid stored configuration: " + e.what());
  }
  auto model = std::make_unique<Model>(config, projection);
  model->set_stage(stage);
  if (stage == ModelStage::adapted) {
    // Stored adapted models keep their frozen split.
    ad::set_trainable(model->encoder().parameters(), false);
    ad::ParameterList<float> bank_params;
    model->bank().collect("bank", bank_params);
    ad::set_trainable(bank_params, false);
  }

  auto params = model->parameters();
  const auto count = io::read_le<std::uint32_t>(is, "record count");
  if (count != params.size()) {
    throw DataError(origin + ": expected " + std::to_string(params.size()) + " parameter records, found " +
                    std::to_string(count));
  }
  for (auto& p : params) {
    const auto name_len = io::read_le<std::uint32_t>(is, "name length");
    if (name_len > 4096) throw DataError(origin + ": implausible parameter name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw DataError(origin + ": truncated parameter name");
    if (name != p.name) throw DataError(origin + ": expected parameter '" + p.name + "', found '" + name + "'");
    const auto rank = io::read_le<std::uint32_t>(is, "rank");
    ad::Shape shape(rank);
    for (auto& d : shape) d = io::read_le<std::uint32_t>(is, "dimension");
    if (shape != p.tensor.shape()) {
      throw DataError(origin + ": parameter '" + name + "' has shape " + ad::to_string(shape) + ", expected " +
                      ad::to_string(p.tensor.shape()));
    }
    auto values = p.tensor.mutable_data();
    for (auto& v : values) v = io::read_le<float>(is, "parameter data");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw DataError(origin + ": trailing bytes after last record");
  return model;
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(is, path);
}

}  // namespace pinsar::pipeline

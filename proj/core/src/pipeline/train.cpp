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

#include "pinsar/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "pinsar/autodiff/optim.hpp"
#include "pinsar/binary_io.hpp"
#include "pinsar/error.hpp"
#include "pinsar/format.hpp"
#include "pinsar/syngen/seed.hpp"

namespace pinsar::pipeline {

namespace {

enum Salt : std::uint64_t { kBatchSalt = 0xba };

// Draws from successive seeded permutations of `pool`.
class PermutationStream {
 public:
  PermutationStream(std::vector<std::size_t> pool, std::mt19937_64& rng) : pool_(std::move(pool)), rng_(rng) {}
  std::size_t next() {
    if (pos_ == order_.size()) {
      order_ = pool_;
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> pool_, order_;
  std::size_t pos_ = 0;
  std::mt19937_64& rng_;
};

}  // namespace

Batches oversample_batches(const std::vector<int>& labels, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("oversampling needs batch_size >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) {
    throw ConfigError("oversampling needs both classes; got " + std::to_string(pos.size()) + " positive and " +
                      std::to_string(neg.size()) + " negative samples");
  }
  const bool pos_major = pos.size() >= neg.size();
  auto& major = pos_major ? pos : neg;
  auto& minor = pos_major ? neg : pos;
  const std::size_t take_major = (batch_size + 1) / 2, take_minor = batch_size / 2;
  const std::size_t n_batches = (major.size() + take_major - 1) / take_major;

  std::mt19937_64 rng(seed);
  PermutationStream major_stream(std::move(major), rng);
  PermutationStream minor_stream(std::move(minor), rng);
  Batches batches(n_batches);
  for (auto& b : batches) {
    b.reserve(batch_size);
    for (std::size_t i = 0; i < take_major; ++i) b.push_back(major_stream.next());
    for (std::size_t i = 0; i < take_minor; ++i) b.push_back(minor_stream.next());
  }
  return batches;
}

Batches shuffled_batches(std::size_t count, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Batches batches;
  for (std::size_t i = 0; i < count; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch_size)));
  }
  return batches;
}

double EvalReport::accuracy() const {
  return total() == 0 ? 0.0 : 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total());
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char acc[32];
  std::snprintf(acc, sizeof(acc), "%.4f", accuracy());
  if (!domain.empty()) os << "domain=" << domain << "\n";
  os << "acc=" << acc << "\n"
     << "total=" << total() << "\n"
     << "tp=" << tp << "\nfp=" << fp << "\ntn=" << tn << "\nfn=" << fn << "\n";
  if (!fingerprint.empty()) os << "fingerprint=" << fingerprint << "\n";
  return os.str();
}

EvalReport make_report(const std::vector<int>& truth, const std::vector<int>& predicted, std::string domain,
                       std::string fingerprint) {
  if (truth.size() != predicted.size()) throw DimensionError("prediction count does not match label count");
  EvalReport r;
  r.domain = std::move(domain);
  r.fingerprint = std::move(fingerprint);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == 1, p = predicted[i] == 1;
    if (t && p) ++r.tp;
    else if (!t && p) ++r.fp;
    else if (!t && !p) ++r.tn;
    else ++r.fn;
  }
  return r;
}

std::vector<int> dataset_labels(const syngen::Dataset& data) {
  if (!data.labeled) throw ContractError("dataset carries no labels");
  std::vector<int> y(data.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = data.samples[i].label;
  return y;
}

Tensor encoder_features(const Model& model, const syngen::Dataset& data, std::size_t batch) {
  ad::NoGradGuard no_grad;
  const std::size_t f = model.encoder().output_dim();
  std::vector<float> out;
  out.reserve(data.size() * f);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + batch); ++i) idx.push_back(i);
    const auto feats = model.features(make_batch(data, idx, model.config().encoding));
    out.insert(out.end(), feats.data().begin(), feats.data().end());
  }
  return Tensor::from({data.size(), f}, std::move(out));
}

Tensor head_outputs(const Model& model, const syngen::Dataset& data, std::size_t batch) {
  ad::NoGradGuard no_grad;
  if (data.size() == 0) {
    return Tensor::zeros({0, model.is_prototype() ? model.config().proto_dim : std::size_t{2}});
  }
  return model.head(encoder_features(model, data, batch));
}

std::vector<int> predict(const Model& model, const syngen::Dataset& data) {
  if (data.size() == 0) return {};
  return model.predict_from_head(head_outputs(model, data));
}

EvalReport evaluate(const Model& model, const syngen::Dataset& data, const std::string& domain) {
  const auto truth = dataset_labels(data);
  return make_report(truth, predict(model, data), domain, io::hex64(model.fingerprint()));
}

TrainLog train(Model& model, const syngen::Dataset& data, const syngen::Dataset* validation,
               const ProgressFn& progress) {
  return train(model, data, dataset_labels(data), validation, progress);
}

TrainLog train(Model& model, const syngen::Dataset& data, const std::vector<int>& labels,
               const syngen::Dataset* validation, const ProgressFn& progress) {
  const TrainConfig& cfg = model.config();
  if (labels.size() != data.size()) throw DimensionError("label count does not match dataset size");
  if (data.size() == 0) throw ContractError("cannot train on an empty dataset");

  auto epoch_batches = [&](std::size_t epoch) {
    const std::uint64_t s = syngen::derive_seed(syngen::derive_seed(cfg.seed, kBatchSalt), epoch);
    return cfg.oversample ? oversample_batches(labels, cfg.batch_size, s)
                          : shuffled_batches(data.size(), cfg.batch_size, s);
  };
  const std::size_t per_epoch = epoch_batches(0).size();

  std::vector<ad::Tensor<float>> params;
  for (const auto& p : model.trainable_parameters()) params.push_back(p.tensor);
  ad::OptimizerConfig oc;
  oc.kind = cfg.optimizer;
  oc.weight_decay = cfg.weight_decay;
  oc.momentum = cfg.momentum;
  ad::Optimizer<float> opt(params, oc, {cfg.lr0, cfg.lr_min, cfg.epochs_s * per_epoch});

  TrainLog log;
  for (std::size_t epoch = 0; epoch < cfg.epochs_s; ++epoch) {
    double epoch_sum = 0;
    const auto batches = epoch_batches(epoch);
    for (const auto& b : batches) {
      proto::Labels y(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) y[i] = labels[b[i]];
      const auto x = make_batch(data, b, cfg.encoding);
      auto loss = model.loss(model.head(model.features(x)), y);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << log.steps << " (epoch " << epoch << ", lr " << opt.current_lr()
            << "); recent losses:";
        const std::size_t from = log.step_loss.size() > 10 ? log.step_loss.size() - 10 : 0;
        for (std::size_t i = from; i < log.step_loss.size(); ++i) msg << ' ' << log.step_loss[i];
        throw NumericalError(msg.str());
      }
      loss.backward();
      opt.step();
      opt.zero_grad();
      log.step_loss.push_back(value);
      epoch_sum += value;
      ++log.steps;
    }
    log.epoch_loss.push_back(epoch_sum / static_cast<double>(batches.size()));
    std::string line = "epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs_s) +
                       " loss " + format_number(log.epoch_loss.back());
    if (validation != nullptr) {
      log.epoch_val_acc.push_back(evaluate(model, *validation).accuracy());
      line += " val_acc " + format_number(log.epoch_val_acc.back());
    }
    if (progress) progress(line);
  }
  model.set_stage(model.stage() == ModelStage::adapted ? ModelStage::adapted : ModelStage::trained);
  return log;
}

}  // namespace pinsar::pipeline

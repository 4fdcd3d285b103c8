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

#include "pinsar/pipeline/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "pinsar/error.hpp"

namespace pinsar::pipeline {

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

TrainConfig distillation_config(TrainConfig base) {
  base.encoder = encoder::EncoderKind::tiny_cnn;
  base.head = HeadKind::softmax;
  base.weight_decay = 0.0;
  return base;
}

DistillResult train_student(const syngen::Dataset& data, const std::vector<int>& labels,
                            const syngen::Dataset& target_test, const TrainConfig& student_config,
                            const ProgressFn& progress) {
  DistillResult out;
  out.student = std::make_unique<Model>(student_config);
  if (student_config.epochs_s > 0) out.log = train(*out.student, data, labels, nullptr, progress);
  if (target_test.size() > 0) out.report = evaluate(*out.student, target_test, "target");
  return out;
}

DistillResult distill_to_cnn(const Model& teacher, const syngen::Dataset& unlabeled_target,
                             const syngen::Dataset& target_test, const TrainConfig& config,
                             const ProgressFn& progress) {
  auto pseudo = adapt::generate_pseudo_labels(teacher, unlabeled_target);
  auto out = train_student(unlabeled_target, pseudo.labels, target_test, distillation_config(config), progress);
  out.pseudo = std::move(pseudo);
  return out;
}

void export_protospace(const Model& model, const syngen::Dataset& data, std::ostream& os) {
  if (!model.is_prototype()) throw ContractError("prototype-space export needs a prototype-head checkpoint");
  const std::size_t d = model.config().proto_dim;
  os << "sample_id,label,pred";
  for (std::size_t e = 0; e < d; ++e) os << ",z" << e;
  os << "\n";
  if (data.size() > 0) {
    const auto z = head_outputs(model, data);
    const auto pred = model.predict_from_head(z);
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << i << ',';
      if (data.labeled) os << static_cast<int>(data.samples[i].label);
      os << ',' << pred[i];
      for (std::size_t e = 0; e < d; ++e) os << ',' << csv_number(z.data()[i * d + e]);
      os << "\n";
    }
  }
  const auto& bank = model.bank();
  const auto m = bank.prototypes.data();
  for (std::size_t c = 0; c < bank.classes(); ++c)
    for (std::size_t k = 0; k < bank.per_class(); ++k) {
      os << "proto," << c << ',' << c;
      for (std::size_t e = 0; e < d; ++e) os << ',' << csv_number(m[(c * bank.per_class() + k) * d + e]);
      os << "\n";
    }
}

std::vector<std::pair<std::size_t, double>> nearest_to_prototype(const Model& model, const syngen::Dataset& data,
                                                                 int cls) {
  if (!model.is_prototype()) throw ContractError("nearest-to-prototype needs a prototype-head checkpoint");
  const auto& bank = model.bank();
  if (cls < 0 || static_cast<std::size_t>(cls) >= bank.classes()) {
    throw ContractError("class " + std::to_string(cls) + " outside [0, " + std::to_string(bank.classes()) + ")");
  }
  std::vector<std::pair<std::size_t, double>> ranked;
  if (data.size() == 0) return ranked;
  ad::NoGradGuard no_grad;
  const auto dist = proto::distances(head_outputs(model, data), bank);
  const std::size_t k = bank.per_class(), c = bank.classes();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float* row = dist.data().data() + (i * c + static_cast<std::size_t>(cls)) * k;
    ranked.emplace_back(i, static_cast<double>(*std::min_element(row, row + k)));
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return ranked;
}

void export_attention(const Model& model, const std::vector<float>& phase, std::ostream& os) {
  const auto* swin = dynamic_cast<const encoder::TinySwin<float>*>(&model.encoder());
  if (swin == nullptr) throw ContractError("attention export needs a tiny_swin checkpoint");
  const std::size_t n = model.encoder().config().image_size;
  if (phase.size() != n * n) throw DimensionError("sample does not match the encoder's image size");
  encoder::AttentionCapture<float> cap;
  {
    ad::NoGradGuard no_grad;
    swin->forward(encoder::encode_batch<float>({phase.data()}, n, model.config().encoding), &cap);
  }
  const std::size_t m = cap.window_size, g = cap.grid, per_row = g / m, tokens = cap.tokens;
  const std::size_t center = (m / 2) * m + m / 2;
  os << "head,window,row,col,weight\n";
  for (std::size_t h = 0; h < cap.heads; ++h)
    for (std::size_t w = 0; w < cap.windows; ++w) {
      const float* row = cap.weights.data() + ((w * cap.heads + h) * tokens + center) * tokens;
      for (std::size_t t = 0; t < tokens; ++t) {
        // Undo the cyclic shift so coordinates refer to the unshifted grid.
        const std::size_t r = ((w / per_row) * m + t / m + cap.shift) % g;
        const std::size_t c = ((w % per_row) * m + t % m + cap.shift) % g;
        os << h << ',' << w << ',' << r << ',' << c << ',' << csv_number(row[t]) << "\n";
      }
    }
}

}  // namespace pinsar::pipeline

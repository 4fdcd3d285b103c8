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

#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "pinsar/error.hpp"

namespace {

using namespace pinsar::cli;

void add_config_flags(CLI::App* cmd, ConfigArgs& c, bool model_shape) {
  cmd->add_option("--config", c.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "run seed");
  if (!model_shape) return;
  cmd->add_option("--encoder", c.encoder, "tiny_cnn or tiny_swin")->check(CLI::IsMember({"tiny_cnn", "tiny_swin"}));
  cmd->add_option("--head", c.head, "prototype or softmax")->check(CLI::IsMember({"prototype", "softmax"}));
  cmd->add_option("--proto-dim", c.proto_dim, "prototype space dimension");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic interferogram generation, prototype-learning training and self-labeling adaptation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "synthesize a labeled interferogram dataset");
  generate->add_option("--pos", gen.pos, "deformation samples")->capture_default_str();
  generate->add_option("--neg", gen.neg, "deformation-free samples")->capture_default_str();
  generate->add_option("--profile", gen.profile, "domain profile")
      ->check(CLI::IsMember({"source", "target"}))
      ->capture_default_str();
  generate->add_option("--seed", gen.seed, "dataset seed")->capture_default_str();
  generate->add_option("--out", gen.out, "output dataset path")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train an encoder with a prototype or softmax head");
  add_config_flags(train, tr.config, true);
  train->add_option("--data", tr.data, "labeled source dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--epochs", tr.config.epochs, "source-stage epochs");
  train->add_option("--val", tr.validation, "validation dataset, evaluated after every epoch")
      ->check(CLI::ExistingFile);
  train->add_option("--out", tr.out, "output checkpoint")->required();

  AdaptArgs ad;
  auto* adapt = app.add_subcommand("adapt", "pseudo-label a target set and retrain a frozen model's projection");
  add_config_flags(adapt, ad.config, false);
  adapt->add_option("--checkpoint", ad.checkpoint, "trained prototype-head checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  adapt->add_option("--target", ad.target, "unlabeled target dataset")->required()->check(CLI::ExistingFile);
  adapt->add_option("--epochs-p", ad.config.epochs_p, "pseudo-stage epochs");
  adapt->add_option("--pseudo-out", ad.pseudo_out, "also write the pseudo-labeled set");
  adapt->add_option("--val", ad.validation, "source validation set to report retention")->check(CLI::ExistingFile);
  adapt->add_option("--out", ad.out, "output checkpoint")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "confusion counts and accuracy on a labeled dataset");
  eval->add_option("--checkpoint", ev.checkpoint, "checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", ev.data, "labeled dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--domain", ev.domain, "domain tag recorded in the report");
  eval->add_option("--out", ev.out, "report path (default stdout)");

  DistillArgs di;
  auto* distill = app.add_subcommand("distill", "train a tiny CNN on a teacher's target pseudo-labels");
  add_config_flags(distill, di.config, false);
  distill->add_option("--teacher", di.teacher, "teacher checkpoint")->required()->check(CLI::ExistingFile);
  distill->add_option("--target", di.target, "unlabeled target dataset")->required()->check(CLI::ExistingFile);
  distill->add_option("--epochs", di.config.epochs, "student epochs");
  distill->add_option("--test", di.test, "labeled held-out target set to evaluate the student")
      ->check(CLI::ExistingFile);
  distill->add_option("--report", di.report_out, "report path (default stdout)");
  distill->add_option("--out", di.out, "student checkpoint")->required();

  ExportArgs ps;
  auto* protospace = app.add_subcommand("export-protospace", "prototype-space coordinates as CSV");
  protospace->add_option("--checkpoint", ps.checkpoint, "prototype-head checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  protospace->add_option("--data", ps.data, "dataset")->required()->check(CLI::ExistingFile);
  protospace->add_option("--out", ps.out, "CSV path (default stdout)");

  ExportArgs at;
  auto* attention = app.add_subcommand("export-attention", "last-layer window attention of one sample as CSV");
  attention->add_option("--checkpoint", at.checkpoint, "tiny_swin checkpoint")->required()->check(CLI::ExistingFile);
  attention->add_option("--data", at.data, "dataset")->required()->check(CLI::ExistingFile);
  attention->add_option("--index", at.index, "sample index")->capture_default_str();
  attention->add_option("--out", at.out, "CSV path (default stdout)");

  ExportArgs nn;
  auto* nearest = app.add_subcommand("nearest", "samples ranked by distance to a class prototype");
  nearest->add_option("--checkpoint", nn.checkpoint, "prototype-head checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  nearest->add_option("--data", nn.data, "dataset")->required()->check(CLI::ExistingFile);
  nearest->add_option("--class", nn.cls, "class (0 = no deformation, 1 = deformation)")->required();
  nearest->add_option("--top", nn.top, "keep the first N (0 = all)")->capture_default_str();
  nearest->add_option("--out", nn.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train) return run_train(tr);
    if (*adapt) return run_adapt(ad);
    if (*eval) return run_eval(ev);
    if (*distill) return run_distill(di);
    if (*protospace) return run_export_protospace(ps);
    if (*attention) return run_export_attention(at);
    if (*nearest) return run_nearest(nn);
  } catch (const pinsar::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return pinsar::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}

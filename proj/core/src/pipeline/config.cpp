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

#include "pinsar/pipeline/config.hpp"

#include <fstream>
#include <sstream>

#include "pinsar/error.hpp"
#include "pinsar/format.hpp"
#include "pinsar/protohead/protohead.hpp"

namespace pinsar::pipeline {

std::string to_string(HeadKind head) { return head == HeadKind::softmax ? "softmax" : "prototype"; }

HeadKind head_kind_from_string(const std::string& name) {
  if (name == "prototype") return HeadKind::prototype;
  if (name == "softmax") return HeadKind::softmax;
  throw ConfigError("unknown head '" + name + "' (expected prototype or softmax)");
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("cannot parse '" + v + "' as a boolean for " + key);
}

std::size_t parse_size(const std::string& v, const std::string& key) {
  return static_cast<std::size_t>(parse_uint(v, key));
}

}  // namespace

void TrainConfig::validate() const {
  if (proto_dim == 0) throw ConfigError("proto_dim must be positive");
  if (protos_per_class == 0) throw ConfigError("protos_per_class must be positive");
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (oversample && batch_size < 2) throw ConfigError("batch_size must be at least 2 when oversampling");
  if (lr0 < 0 || lr_min < 0 || lr_p < 0) throw ConfigError("learning rates must be non-negative");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
  encoder_config().validate();
}

double TrainConfig::effective_lambda() const { return lambda >= 0 ? lambda : proto::default_lambda(proto_dim); }

encoder::EncoderConfig TrainConfig::encoder_config() const {
  encoder::EncoderConfig c;
  c.kind = encoder;
  c.encoding = encoding;
  return c;
}

void TrainConfig::set(const std::string& key, const std::string& v) {
  if (key == "encoder") encoder = encoder::encoder_kind_from_string(v);
  else if (key == "encoding") encoding = encoder::input_encoding_from_string(v);
  else if (key == "head") head = head_kind_from_string(v);
  else if (key == "proto_dim") proto_dim = parse_size(v, key);
  else if (key == "protos_per_class") protos_per_class = parse_size(v, key);
  else if (key == "gamma") gamma = parse_double(v, key);
  else if (key == "lambda") lambda = v == "auto" ? -1.0 : parse_double(v, key);
  else if (key == "epochs_s") epochs_s = parse_size(v, key);
  else if (key == "epochs_p") epochs_p = parse_size(v, key);
  else if (key == "batch_size") batch_size = parse_size(v, key);
  else if (key == "lr0") lr0 = parse_double(v, key);
  else if (key == "lr_min") lr_min = parse_double(v, key);
  else if (key == "lr_p") lr_p = parse_double(v, key);
  else if (key == "weight_decay") weight_decay = parse_double(v, key);
  else if (key == "optimizer") optimizer = ad::optimizer_kind_from_string(v);
  else if (key == "momentum") momentum = parse_double(v, key);
  else if (key == "oversample") oversample = parse_bool(v, key);
  else if (key == "seed") seed = parse_uint(v, key);
  else if (key == "schedule") {
    if (v != "cosine") throw ConfigError("only the cosine schedule is supported, got '" + v + "'");
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"batch_size", std::to_string(batch_size)},
      {"encoder", encoder::to_string(encoder)},
      {"encoding", encoder::to_string(encoding)},
      {"epochs_p", std::to_string(epochs_p)},
      {"epochs_s", std::to_string(epochs_s)},
      {"gamma", format_number(gamma)},
      {"head", to_string(head)},
      {"lambda", lambda >= 0 ? format_number(lambda) : "auto"},
      {"lr0", format_number(lr0)},
      {"lr_min", format_number(lr_min)},
      {"lr_p", format_number(lr_p)},
      {"momentum", format_number(momentum)},
      {"optimizer", ad::to_string(optimizer)},
      {"oversample", oversample ? "true" : "false"},
      {"proto_dim", std::to_string(proto_dim)},
      {"protos_per_class", std::to_string(protos_per_class)},
      {"schedule", "cosine"},
      {"seed", std::to_string(seed)},
      {"weight_decay", format_number(weight_decay)},
  };
}

std::string TrainConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  for (const auto& [k, v] : parse_key_values(text, "config")) base.set(k, v);
  base.validate();
  return base;
}

TrainConfig load_config_file(const std::string& path, TrainConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  for (const auto& [k, v] : parse_key_values(ss.str(), path)) base.set(k, v);
  base.validate();
  return base;
}

}  // namespace pinsar::pipeline

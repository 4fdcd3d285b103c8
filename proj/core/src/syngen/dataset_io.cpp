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

#include <fstream>
#include <sstream>

#include "pinsar/binary_io.hpp"
#include "pinsar/format.hpp"
#include "pinsar/syngen/dataset.hpp"

namespace pinsar::syngen {

namespace {
constexpr char kMagic[9] = "PINSAR01";
}

std::string manifest_path(const std::string& dataset_path) { return dataset_path + ".manifest"; }

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  const std::size_t pixels = ds.grid_size * ds.grid_size;
  io::write_magic(os, kMagic);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.samples.size()));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.grid_size));
  io::write_le<std::uint8_t>(os, ds.labeled ? 1 : 0);
  for (const auto& s : ds.samples) {
    if (s.phase.size() != pixels) throw DimensionError("sample grid does not match dataset grid_size");
    io::write_le<std::uint64_t>(os, s.seed);
    io::write_le<std::uint8_t>(os, s.label);
    for (float v : s.phase) io::write_le<float>(os, v);
  }
  if (!os) throw DataError("write failed for " + path);
  write_manifest(manifest_path(path), ds.manifest);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset " + path);
  io::expect_magic(is, kMagic, path);
  Dataset ds;
  const auto count = io::read_le<std::uint32_t>(is, "sample count");
  ds.grid_size = io::read_le<std::uint32_t>(is, "grid size");
  const auto flag = io::read_le<std::uint8_t>(is, "label flag");
  if (flag > 1) throw DataError(path + ": label-present flag must be 0 or 1");
  ds.labeled = flag == 1;
  if (ds.grid_size == 0 || ds.grid_size > 4096) throw DataError(path + ": implausible grid size");
  const std::size_t pixels = ds.grid_size * ds.grid_size;
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.seed = io::read_le<std::uint64_t>(is, "sample seed");
    s.label = io::read_le<std::uint8_t>(is, "sample label");
    if (ds.labeled && s.label > 1) throw DataError(path + ": label out of range");
    s.phase.resize(pixels);
    if (!is.read(reinterpret_cast<char*>(s.phase.data()), static_cast<std::streamsize>(pixels * sizeof(float)))) {
      throw DataError(path + ": truncated sample record");
    }
    for (float& v : s.phase) v = io::byteswap_if_big(v);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw DataError(path + ": trailing bytes after last record");
  std::ifstream probe(manifest_path(path));
  if (probe) ds.manifest = read_manifest(manifest_path(path));
  return ds;
}

void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  for (const auto& [k, v] : m.header) os << k << '=' << v << '\n';
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    for (const auto& [k, v] : m.samples[i]) os << "sample[" << i << "]." << k << '=' << v << '\n';
  if (!os) throw DataError("write failed for " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path);
  Manifest m;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(path + ": line without '=': " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key.rfind("sample[", 0) == 0) {
      const auto close = key.find("].");
      if (close == std::string::npos) throw DataError(path + ": malformed sample key " + key);
      const auto idx = static_cast<std::size_t>(parse_uint(key.substr(7, close - 7), "manifest sample index"));
      if (idx >= m.samples.size()) m.samples.resize(idx + 1);
      m.samples[idx].emplace_back(key.substr(close + 2), std::move(value));
    } else {
      m.header.emplace_back(std::move(key), std::move(value));
    }
  }
  return m;
}

}  // namespace pinsar::syngen

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
#include <string>
#include <utility>
#include <vector>

#include "pinsar/syngen/atmosphere.hpp"
#include "pinsar/syngen/scene.hpp"

namespace pinsar::syngen {

enum class DomainProfile { source, target };

std::string to_string(DomainProfile profile);
DomainProfile domain_profile_from_string(const std::string& name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Parameter distributions of one domain. The target profile is a covariate
/// shift of the source profile: stronger turbulence, weaker deformation and
/// incoherent patches, with unchanged label semantics.
struct ProfileParams {
  Range deformation{0.10, 0.25};       // peak |LOS|, m
  double turbulent_mean = 0.02;        // m
  Range turbulent_factor{0.5, 2.0};    // per-scene multiplier of turbulent_mean
  double correlation_length = 5000.0;  // m
  double incoherence_coverage = 0.0;   // fraction of pixels
  double topo_coupling_max = 2.0;      // rad/km, symmetric range
  double ramp_max = 0.05;              // rad/pixel, symmetric range
  DemParams dem;
  double center_offset_max = 1200.0;   // m from scene center
  Range mogi_depth{2000.0, 5000.0};
  Range sill_depth{1500.0, 3500.0};
  Range sill_extent{1500.0, 4000.0};
  Range sill_dip{0.0, 15.0};
  Range dyke_top_depth{300.0, 1500.0};
  Range dyke_length{1500.0, 5000.0};
  Range dyke_down_dip{1500.0, 4000.0};
  Range dyke_dip{70.0, 90.0};
};

ProfileParams profile_params(DomainProfile profile);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Per-sample provenance as ordered key=value records plus dataset-level keys.
struct Manifest {
  KeyValues header;
  std::vector<KeyValues> samples;

  std::string header_value(const std::string& key) const;
};

KeyValues provenance_record(const Provenance& p);

struct Sample {
  std::uint64_t seed = 0;
  std::uint8_t label = 0;
  std::vector<float> phase;  // grid_size^2, row-major, in [-pi, pi)
};

struct Dataset {
  std::size_t grid_size = 64;
  bool labeled = true;
  std::vector<Sample> samples;
  Manifest manifest;

  std::size_t size() const { return samples.size(); }
  std::size_t count_label(std::uint8_t label) const;
};

/// Rounds into float while keeping the stored value inside [-pi, pi).
float to_stored_phase(double wrapped);

/// One labeled scene drawn from the profile; a pure function of its arguments.
Interferogram synthesize_scene(std::uint8_t label, const ProfileParams& profile, const SceneParams& base,
                               std::uint64_t sample_seed);

/// n_pos deformation and n_neg clean scenes in a seed-determined order.
Dataset generate_dataset(std::size_t n_pos, std::size_t n_neg, DomainProfile profile, std::uint64_t seed,
                         const SceneParams& base = {});

/// Binary container ("PINSAR01") plus a "<path>.manifest" text file.
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

std::string manifest_path(const std::string& dataset_path);

}  // namespace pinsar::syngen

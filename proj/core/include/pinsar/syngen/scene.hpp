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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pinsar/error.hpp"

namespace pinsar::syngen {

/// Square raster in row-major order. Row 0 is the northern edge, column 0 the
/// western edge; pixel centers sit at ((j - (n-1)/2) * spacing, ((n-1)/2 - i) * spacing)
/// relative to the scene center.
struct Grid {
  std::size_t size = 0;
  std::vector<double> values;

  Grid() = default;
  explicit Grid(std::size_t n, double fill = 0.0) : size(n), values(n * n, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * size + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  double max_abs() const;
};

using Mask = std::vector<std::uint8_t>;

struct SceneParams {
  std::size_t grid_size = 64;
  double pixel_spacing = 100.0;       // m
  double radar_wavelength = 0.0556;   // m, C-band
  double incidence_angle = 39.0;      // deg
  double heading = -10.0;             // deg clockwise from north
  std::uint64_t rng_seed = 0;

  void validate() const;
  double east(std::size_t j) const;
  double north(std::size_t i) const;
};

/// Unit vector from ground to satellite (east, north, up) for a right-looking sensor.
std::array<double, 3> los_unit_vector(const SceneParams& scene);

enum class SourceKind { none, mogi, dyke, sill };

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& name);

struct DeformationSource {
  SourceKind kind = SourceKind::none;
  double center_x = 0.0;        // m east of scene center
  double center_y = 0.0;        // m north of scene center
  double depth = 1000.0;        // m; top depth for dykes
  double volume_change = 0.0;   // m^3 (mogi)
  double strike = 0.0;          // deg clockwise from north
  double dip = 0.0;             // deg from horizontal
  double length = 0.0;          // m along strike
  double width = 0.0;           // m across strike (sill) or down dip (dyke)
  double peak_amplitude = 0.0;  // m of peak |LOS| (dyke/sill)
};

struct AtmosphereParams {
  double turbulent_max_strength = 0.02;  // m of delay
  double correlation_length = 5000.0;    // m
  double topo_coupling = 0.0;            // rad per km of elevation
  double ramp_a = 0.0;                   // rad per pixel (east)
  double ramp_b = 0.0;                   // rad per pixel (south)

  void validate() const;
};

struct Provenance {
  SceneParams scene;
  DeformationSource source;
  AtmosphereParams atmosphere;
  double los_peak = 0.0;  // m
  double incoherence_fraction = 0.0;
};

/// Wrapped phase in [-pi, pi) with label 1 iff a deformation source was composed in.
struct Interferogram {
  Grid phase;
  std::uint8_t label = 0;
  Mask coherence_mask;  // 1 = incoherent pixel (replaced by noise)
  Provenance provenance;
};

}  // namespace pinsar::syngen

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

#include "pinsar/syngen/scene.hpp"

#include <cmath>
#include <numbers>

namespace pinsar::syngen {

double Grid::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void SceneParams::validate() const {
  if (grid_size < 16) throw ConfigError("grid_size must be >= 16, got " + std::to_string(grid_size));
  if (!(pixel_spacing > 0)) throw ConfigError("pixel_spacing must be positive");
  if (!(radar_wavelength > 0)) throw ConfigError("radar_wavelength must be positive");
  if (!(incidence_angle > 0 && incidence_angle < 90)) throw ConfigError("incidence_angle must lie in (0, 90) degrees");
}

double SceneParams::east(std::size_t j) const {
  return (static_cast<double>(j) - 0.5 * static_cast<double>(grid_size - 1)) * pixel_spacing;
}

double SceneParams::north(std::size_t i) const {
  return (0.5 * static_cast<double>(grid_size - 1) - static_cast<double>(i)) * pixel_spacing;
}

std::array<double, 3> los_unit_vector(const SceneParams& scene) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double inc = scene.incidence_angle * deg;
  const double head = scene.heading * deg;
  // Ground-to-sensor horizontal component points to azimuth heading - 90 deg.
  return {-std::cos(head) * std::sin(inc), std::sin(head) * std::sin(inc), std::cos(inc)};
}

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::none: return "none";
    case SourceKind::mogi: return "mogi";
    case SourceKind::dyke: return "dyke";
    case SourceKind::sill: return "sill";
  }
  return "none";
}

SourceKind source_kind_from_string(const std::string& name) {
  if (name == "none") return SourceKind::none;
  if (name == "mogi") return SourceKind::mogi;
  if (name == "dyke") return SourceKind::dyke;
  if (name == "sill") return SourceKind::sill;
  throw ConfigError("unknown deformation source kind '" + name + "'");
}

void AtmosphereParams::validate() const {
  if (!(turbulent_max_strength >= 0)) throw ConfigError("turbulent_max_strength must be >= 0");
  if (!(correlation_length > 0)) throw ConfigError("correlation_length must be positive");
}

}  // namespace pinsar::syngen

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

#include "pinsar/syngen/deformation.hpp"

#include <cmath>
#include <numbers>

namespace pinsar::syngen {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

EnuField zero_field(std::size_t n) { return {Grid(n), Grid(n), Grid(n)}; }

void scale_field(EnuField& f, double s) {
  for (Grid* g : {&f.east, &f.north, &f.up})
    for (double& v : g->values) v *= s;
}

}  // namespace

std::array<double, 3> mogi_displacement(const DeformationSource& source, double x, double y, double poisson) {
  const double dx = x - source.center_x;
  const double dy = y - source.center_y;
  const double r2 = dx * dx + dy * dy;
  const double d = source.depth;
  const double c = source.volume_change * (1.0 - poisson) / std::numbers::pi / std::pow(r2 + d * d, 1.5);
  // u_r * (dx, dy) / r == c * (dx, dy); no singularity at r = 0.
  return {c * dx, c * dy, c * d};
}

EnuField mogi_enu(const DeformationSource& source, const SceneParams& scene) {
  if (source.kind != SourceKind::mogi) throw ContractError("mogi_enu requires a mogi source, got " + to_string(source.kind));
  if (!(source.depth > 0)) throw ConfigError("mogi source depth must be positive");
  const std::size_t n = scene.grid_size;
  EnuField f = zero_field(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto u = mogi_displacement(source, scene.east(j), scene.north(i));
      f.east(i, j) = u[0];
      f.north(i, j) = u[1];
      f.up(i, j) = u[2];
    }
  return f;
}

Grid project_los(const EnuField& field, const SceneParams& scene) {
  const auto e = los_unit_vector(scene);
  Grid out(field.up.size);
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = e[0] * field.east.values[k] + e[1] * field.north.values[k] + e[2] * field.up.values[k];
  }
  return out;
}

Grid mogi_los(const DeformationSource& source, const SceneParams& scene) {
  return project_los(mogi_enu(source, scene), scene);
}

EnuField dislocation_enu(const DeformationSource& source, const SceneParams& scene) {
  if (source.kind != SourceKind::dyke && source.kind != SourceKind::sill) {
    throw ContractError("dislocation_enu requires a dyke or sill source, got " + to_string(source.kind));
  }
  if (!(source.depth > 0)) throw ConfigError("dislocation source depth must be positive");
  const std::size_t n = scene.grid_size;
  EnuField f = zero_field(n);
  if (source.peak_amplitude == 0.0) return f;

  const double s = source.strike * kDeg;
  const double ax = std::sin(s), ay = std::cos(s);    // along strike
  const double nx = std::cos(s), ny = -std::sin(s);   // across strike, dip side
  const double d = source.depth;
  const double sigma_along = 0.5 * source.length + 0.5 * d;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double px = scene.east(j) - source.center_x;
      const double py = scene.north(i) - source.center_y;
      const double u = px * ax + py * ay;
      double v = px * nx + py * ny;
      const double along = std::exp(-0.5 * u * u / (sigma_along * sigma_along));
      if (source.kind == SourceKind::sill) {
        const double sigma_across = 0.5 * source.width + 0.5 * d;
        v -= 0.5 * d * std::sin(source.dip * kDeg);
        f.up(i, j) = along * std::exp(-0.5 * v * v / (sigma_across * sigma_across));
      } else {
        const double scale = d + 0.25 * source.width;
        const double dip = std::max(source.dip, 1.0) * kDeg;
        v -= 0.5 * (d + 0.5 * source.width) * std::cos(dip) / std::sin(dip);
        const double t = v / scale;
        const double env = along * std::exp(-0.5 * t * t);
        const double horizontal = t * env;
        f.up(i, j) = t * t * env;
        f.east(i, j) = horizontal * nx;
        f.north(i, j) = horizontal * ny;
      }
    }
  }
  const double peak = project_los(f, scene).max_abs();
  if (peak > 0) scale_field(f, source.peak_amplitude / peak);
  return f;
}

Grid dislocation_los(const DeformationSource& source, const SceneParams& scene) {
  return project_los(dislocation_enu(source, scene), scene);
}

Grid deformation_los(const DeformationSource& source, const SceneParams& scene) {
  switch (source.kind) {
    case SourceKind::none: return Grid(scene.grid_size);
    case SourceKind::mogi: return mogi_los(source, scene);
    case SourceKind::dyke:
    case SourceKind::sill: return dislocation_los(source, scene);
  }
  return Grid(scene.grid_size);
}

}  // namespace pinsar::syngen

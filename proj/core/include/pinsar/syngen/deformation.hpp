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

#include "pinsar/syngen/scene.hpp"

namespace pinsar::syngen {

inline constexpr double kPoissonRatio = 0.25;

/// East, north, up surface displacement grids in meters.
struct EnuField {
  Grid east;
  Grid north;
  Grid up;
};

/// Mogi point source surface displacement at (x, y) relative to the scene center.
std::array<double, 3> mogi_displacement(const DeformationSource& source, double x, double y,
                                        double poisson = kPoissonRatio);

EnuField mogi_enu(const DeformationSource& source, const SceneParams& scene);
Grid mogi_los(const DeformationSource& source, const SceneParams& scene);

/// Gaussian-lobe approximation of a dyke or sill. The unscaled pattern is
/// normalized so the peak |LOS| on the grid equals source.peak_amplitude.
///   sill: vertical uplift with axes (length, width) rotated by strike;
///         dip shifts the lobe down-dip.
///   dyke: two uplift lobes flanking the trace plus antisymmetric
///         across-strike horizontal motion.
EnuField dislocation_enu(const DeformationSource& source, const SceneParams& scene);
Grid dislocation_los(const DeformationSource& source, const SceneParams& scene);

Grid project_los(const EnuField& field, const SceneParams& scene);

/// Dispatches on source.kind; kind none yields a zero grid.
Grid deformation_los(const DeformationSource& source, const SceneParams& scene);

}  // namespace pinsar::syngen

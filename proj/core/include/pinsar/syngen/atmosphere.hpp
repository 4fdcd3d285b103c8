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

#include "pinsar/syngen/scene.hpp"

namespace pinsar::syngen {

struct DemParams {
  double spectral_exponent = 2.0;  // power spectrum ~ k^-beta
  double relief_min = 0.0;         // m
  double relief_max = 2000.0;      // m
};

/// Fractal elevation model by spectral synthesis, rescaled to [relief_min, relief_max].
Grid synthesize_dem(const SceneParams& scene, const DemParams& dem = {});

/// Zero-mean unit-variance Gaussian field with covariance exp(-r / correlation_length),
/// realized by circulant embedding on a padded torus and cropped to the scene.
Grid correlated_field(std::size_t grid_size, double pixel_spacing, double correlation_length,
                      std::uint64_t seed);

/// Turbulent delay rescaled so max |delay| == atmosphere.turbulent_max_strength,
/// converted to phase with 4 pi / lambda.
Grid turbulent_aps(const AtmosphereParams& atmosphere, const SceneParams& scene);

/// coupling (rad/km) x elevation (km).
Grid topo_aps(const Grid& dem, double coupling);

Grid linear_ramp(const SceneParams& scene, double ramp_a, double ramp_b);

/// Blob-shaped incoherent regions covering round(coverage * n^2) pixels.
Mask incoherence_mask(const SceneParams& scene, double coverage, std::uint64_t seed);

}  // namespace pinsar::syngen

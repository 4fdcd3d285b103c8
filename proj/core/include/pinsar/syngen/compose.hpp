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

/// Wraps into [-pi, pi).
double wrap_phase(double x);

struct PhaseComponents {
  SourceKind deformation_kind = SourceKind::none;
  Grid deformation_los;  // m
  Grid turbulent;        // rad
  Grid topographic;      // rad
  Grid ramp;             // rad
  Mask incoherence;      // empty = fully coherent
};

/// phase = wrap(-(4 pi / lambda) los + turbulent + topographic + ramp); masked
/// pixels become i.i.d. uniform noise drawn from noise_seed. The per-pixel sum
/// is accumulated in sorted order, so swapping the additive terms between
/// slots cannot change a single bit of the output.
Interferogram compose(const PhaseComponents& components, const SceneParams& scene, std::uint64_t noise_seed);

}  // namespace pinsar::syngen

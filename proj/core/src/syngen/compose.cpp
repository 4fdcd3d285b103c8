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

#include "pinsar/syngen/compose.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace pinsar::syngen {

double wrap_phase(double x) {
  constexpr double pi = std::numbers::pi;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = x - two_pi * std::floor((x + pi) / two_pi);
  if (w >= pi) w -= two_pi;
  if (w < -pi) w += two_pi;
  return w;
}

Interferogram compose(const PhaseComponents& c, const SceneParams& scene, std::uint64_t noise_seed) {
  scene.validate();
  const std::size_t n = scene.grid_size;
  const std::size_t count = n * n;
  auto check = [&](const Grid& g, const char* name) {
    if (!g.values.empty() && g.values.size() != count) {
      throw DimensionError(std::string("compose: ") + name + " grid has " + std::to_string(g.values.size()) +
                           " pixels, scene has " + std::to_string(count));
    }
  };
  check(c.deformation_los, "deformation");
  check(c.turbulent, "turbulent");
  check(c.topographic, "topographic");
  check(c.ramp, "ramp");
  if (!c.incoherence.empty() && c.incoherence.size() != count) {
    throw DimensionError("compose: incoherence mask does not match scene size");
  }

  const double to_phase = -4.0 * std::numbers::pi / scene.radar_wavelength;
  auto at = [](const Grid& g, std::size_t k) { return g.values.empty() ? 0.0 : g.values[k]; };

  Interferogram out;
  out.phase = Grid(n);
  out.label = c.deformation_kind == SourceKind::none ? 0 : 1;
  out.coherence_mask = c.incoherence.empty() ? Mask(count, 0) : c.incoherence;

  std::mt19937_64 rng(noise_seed);
  std::uniform_real_distribution<double> noise(-std::numbers::pi, std::numbers::pi);
  std::size_t masked = 0;
  for (std::size_t k = 0; k < count; ++k) {
    std::array<double, 4> terms{to_phase * at(c.deformation_los, k), at(c.turbulent, k), at(c.topographic, k),
                                at(c.ramp, k)};
    std::sort(terms.begin(), terms.end());
    const double total = ((terms[0] + terms[1]) + terms[2]) + terms[3];
    if (out.coherence_mask[k] != 0) {
      out.phase.values[k] = wrap_phase(noise(rng));
      ++masked;
    } else {
      out.phase.values[k] = wrap_phase(total);
    }
  }
  out.provenance.scene = scene;
  out.provenance.los_peak = c.deformation_los.values.empty() ? 0.0 : c.deformation_los.max_abs();
  out.provenance.incoherence_fraction = static_cast<double>(masked) / static_cast<double>(count);
  return out;
}

}  // namespace pinsar::syngen

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

#include "pinsar/syngen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pinsar/format.hpp"
#include "pinsar/syngen/compose.hpp"
#include "pinsar/syngen/deformation.hpp"
#include "pinsar/syngen/seed.hpp"

namespace pinsar::syngen {

namespace {

enum Salt : std::uint64_t {
  kSceneSalt = 1,
  kMaskSalt = 2,
  kNoiseSalt = 3,
  kOrderSalt = 4,
};

double draw(std::mt19937_64& rng, Range r) {
  if (r.hi <= r.lo) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

double draw_symmetric(std::mt19937_64& rng, double bound) { return draw(rng, {-bound, bound}); }

}  // namespace

std::string to_string(DomainProfile profile) { return profile == DomainProfile::source ? "source" : "target"; }

DomainProfile domain_profile_from_string(const std::string& name) {
  if (name == "source") return DomainProfile::source;
  if (name == "target") return DomainProfile::target;
  throw ConfigError("unknown domain profile '" + name + "' (expected source or target)");
}

ProfileParams profile_params(DomainProfile profile) {
  ProfileParams p;
  if (profile == DomainProfile::target) {
    p.turbulent_mean *= 2.0;
    p.deformation = {0.05, 0.15};
    p.incoherence_coverage = 0.15;
  }
  return p;
}

std::string Manifest::header_value(const std::string& key) const {
  for (const auto& [k, v] : header)
    if (k == key) return v;
  return {};
}

KeyValues provenance_record(const Provenance& p) {
  const auto& s = p.source;
  const auto& a = p.atmosphere;
  KeyValues kv{
      {"kind", to_string(s.kind)},
      {"grid_size", std::to_string(p.scene.grid_size)},
      {"pixel_spacing", format_number(p.scene.pixel_spacing)},
      {"wavelength", format_number(p.scene.radar_wavelength)},
      {"incidence", format_number(p.scene.incidence_angle)},
      {"heading", format_number(p.scene.heading)},
      {"scene_seed", std::to_string(p.scene.rng_seed)},
  };
  if (s.kind != SourceKind::none) {
    kv.insert(kv.end(), {{"center_x", format_number(s.center_x)},
                         {"center_y", format_number(s.center_y)},
                         {"depth", format_number(s.depth)}});
    if (s.kind == SourceKind::mogi) {
      kv.emplace_back("volume_change", format_number(s.volume_change));
    } else {
      kv.insert(kv.end(), {{"strike", format_number(s.strike)},
                           {"dip", format_number(s.dip)},
                           {"length", format_number(s.length)},
                           {"width", format_number(s.width)},
                           {"peak_amplitude", format_number(s.peak_amplitude)}});
    }
  }
  kv.insert(kv.end(), {{"los_peak", format_number(p.los_peak)},
                       {"turbulent_strength", format_number(a.turbulent_max_strength)},
                       {"correlation_length", format_number(a.correlation_length)},
                       {"topo_coupling", format_number(a.topo_coupling)},
                       {"ramp_a", format_number(a.ramp_a)},
                       {"ramp_b", format_number(a.ramp_b)},
                       {"incoherence_fraction", format_number(p.incoherence_fraction)}});
  return kv;
}

std::size_t Dataset::count_label(std::uint8_t label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [label](const Sample& s) { return s.label == label; }));
}

float to_stored_phase(double wrapped) {
  constexpr float hi = 3.14159250259f;  // largest float below pi
  constexpr float lo = -hi;
  return std::clamp(static_cast<float>(wrapped), lo, hi);
}

Interferogram synthesize_scene(std::uint8_t label, const ProfileParams& profile, const SceneParams& base,
                               std::uint64_t sample_seed) {
  SceneParams scene = base;
  scene.rng_seed = derive_seed(sample_seed, kSceneSalt);
  scene.validate();
  std::mt19937_64 rng(sample_seed);

  DeformationSource source;
  PhaseComponents comps;
  if (label != 0) {
    static constexpr SourceKind kinds[] = {SourceKind::mogi, SourceKind::dyke, SourceKind::sill};
    source.kind = kinds[std::uniform_int_distribution<int>(0, 2)(rng)];
    source.center_x = draw_symmetric(rng, profile.center_offset_max);
    source.center_y = draw_symmetric(rng, profile.center_offset_max);
    const double peak = draw(rng, profile.deformation);
    switch (source.kind) {
      case SourceKind::mogi: {
        source.depth = draw(rng, profile.mogi_depth);
        source.volume_change = 1e6;
        Grid unit = mogi_los(source, scene);
        const double scale = peak / unit.max_abs();
        source.volume_change *= scale;
        for (double& v : unit.values) v *= scale;
        comps.deformation_los = std::move(unit);
        break;
      }
      case SourceKind::sill:
        source.depth = draw(rng, profile.sill_depth);
        source.length = draw(rng, profile.sill_extent);
        source.width = draw(rng, profile.sill_extent);
        source.strike = draw(rng, {0.0, 360.0});
        source.dip = draw(rng, profile.sill_dip);
        source.peak_amplitude = peak;
        comps.deformation_los = dislocation_los(source, scene);
        break;
      case SourceKind::dyke:
        source.depth = draw(rng, profile.dyke_top_depth);
        source.length = draw(rng, profile.dyke_length);
        source.width = draw(rng, profile.dyke_down_dip);
        source.strike = draw(rng, {0.0, 360.0});
        source.dip = draw(rng, profile.dyke_dip);
        source.peak_amplitude = peak;
        comps.deformation_los = dislocation_los(source, scene);
        break;
      case SourceKind::none: break;
    }
  }
  comps.deformation_kind = source.kind;

  AtmosphereParams atm;
  atm.turbulent_max_strength = profile.turbulent_mean * draw(rng, profile.turbulent_factor);
  atm.correlation_length = profile.correlation_length;
  atm.topo_coupling = draw_symmetric(rng, profile.topo_coupling_max);
  atm.ramp_a = draw_symmetric(rng, profile.ramp_max);
  atm.ramp_b = draw_symmetric(rng, profile.ramp_max);

  comps.turbulent = turbulent_aps(atm, scene);
  comps.topographic = topo_aps(synthesize_dem(scene, profile.dem), atm.topo_coupling);
  comps.ramp = linear_ramp(scene, atm.ramp_a, atm.ramp_b);
  comps.incoherence = incoherence_mask(scene, profile.incoherence_coverage, derive_seed(sample_seed, kMaskSalt));

  Interferogram ifg = compose(comps, scene, derive_seed(sample_seed, kNoiseSalt));
  ifg.provenance.source = source;
  ifg.provenance.atmosphere = atm;
  return ifg;
}

Dataset generate_dataset(std::size_t n_pos, std::size_t n_neg, DomainProfile profile, std::uint64_t seed,
                         const SceneParams& base) {
  base.validate();
  const ProfileParams params = profile_params(profile);
  const std::uint64_t stream = derive_seed(seed, profile == DomainProfile::source ? 0x50 : 0x54);

  std::vector<std::uint8_t> labels(n_pos, 1);
  labels.resize(n_pos + n_neg, 0);
  std::mt19937_64 order_rng(derive_seed(stream, kOrderSalt));
  std::shuffle(labels.begin(), labels.end(), order_rng);

  Dataset ds;
  ds.grid_size = base.grid_size;
  ds.labeled = true;
  ds.manifest.header = {{"format", "PINSAR01"},
                        {"profile", to_string(profile)},
                        {"seed", std::to_string(seed)},
                        {"count", std::to_string(labels.size())},
                        {"positives", std::to_string(n_pos)},
                        {"negatives", std::to_string(n_neg)}};
  ds.samples.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint64_t sample_seed = derive_seed(stream, 0x1000 + i);
    const Interferogram ifg = synthesize_scene(labels[i], params, base, sample_seed);
    Sample s;
    s.seed = sample_seed;
    s.label = ifg.label;
    s.phase.resize(ifg.phase.values.size());
    std::transform(ifg.phase.values.begin(), ifg.phase.values.end(), s.phase.begin(), to_stored_phase);
    ds.samples.push_back(std::move(s));
    KeyValues rec{{"seed", std::to_string(sample_seed)}, {"label", std::to_string(ifg.label)}};
    auto prov = provenance_record(ifg.provenance);
    rec.insert(rec.end(), prov.begin(), prov.end());
    ds.manifest.samples.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace pinsar::syngen

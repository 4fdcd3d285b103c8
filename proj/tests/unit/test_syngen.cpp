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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "pinsar/error.hpp"
#include "pinsar/syngen/atmosphere.hpp"
#include "pinsar/syngen/compose.hpp"
#include "pinsar/syngen/dataset.hpp"
#include "pinsar/syngen/deformation.hpp"

using namespace pinsar;
using namespace pinsar::syngen;

namespace {

constexpr double kPi = std::numbers::pi;

// Clockwise quarter turn of a north-up image.
Grid rotate_cw(const Grid& g) {
  const std::size_t n = g.size;
  Grid out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = g(n - 1 - j, i);
  return out;
}

double max_abs_diff(const Grid& a, const Grid& b) {
  double m = 0;
  for (std::size_t k = 0; k < a.values.size(); ++k) m = std::max(m, std::abs(a.values[k] - b.values[k]));
  return m;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pinsar_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::string manifest_value(const KeyValues& kv, const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  return {};
}

// Radially averaged periodogram slope in log-log, fitted by least squares.
double periodogram_slope(const Grid& g) {
  const int n = static_cast<int>(g.size);
  double mean = 0;
  for (double v : g.values) mean += v;
  mean /= static_cast<double>(g.values.size());
  std::vector<std::complex<double>> tw(n);
  for (int k = 0; k < n; ++k) tw[k] = std::polar(1.0, -2.0 * kPi * k / n);
  // Separable naive DFT: rows, then columns.
  std::vector<std::complex<double>> rows(n * n), full(n * n);
  for (int i = 0; i < n; ++i)
    for (int u = 0; u < n; ++u) {
      std::complex<double> acc = 0;
      for (int j = 0; j < n; ++j) acc += (g(i, j) - mean) * tw[(u * j) % n];
      rows[i * n + u] = acc;
    }
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      std::complex<double> acc = 0;
      for (int i = 0; i < n; ++i) acc += rows[i * n + u] * tw[(v * i) % n];
      full[v * n + u] = acc;
    }
  std::vector<double> power(n / 2 + 1, 0.0);
  std::vector<int> count(n / 2 + 1, 0);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) {
      const int fu = u <= n / 2 ? u : u - n;
      const int fv = v <= n / 2 ? v : v - n;
      const int r = static_cast<int>(std::lround(std::sqrt(double(fu * fu + fv * fv))));
      if (r < 1 || r > n / 2) continue;
      power[r] += std::norm(full[v * n + u]);
      ++count[r];
    }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int r = 1; r <= n / 2; ++r) {
    const double x = std::log(static_cast<double>(r));
    const double y = std::log(power[r] / count[r]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TEST_CASE("wrap_phase uses the [-pi, pi) convention") {
  CHECK(wrap_phase(1.5 * kPi) == doctest::Approx(-0.5 * kPi).epsilon(1e-12));
  CHECK(wrap_phase(kPi) == -kPi);
  CHECK(wrap_phase(-kPi) == -kPi);
  CHECK(wrap_phase(0.0) == 0.0);
}

TEST_CASE("wrap_phase is 2pi periodic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xd(-10 * kPi, 10 * kPi);
  std::uniform_int_distribution<int> kd(-5, 5);
  for (int t = 0; t < 10000; ++t) {
    const double x = xd(rng);
    const int k = kd(rng);
    const double w = wrap_phase(x);
    REQUIRE(w >= -kPi);
    REQUIRE(w < kPi);
    REQUIRE(std::abs(wrap_phase(x + 2 * kPi * k) - w) < 1e-6);
  }
}

TEST_CASE("mogi closed form") {
  DeformationSource src;
  src.kind = SourceKind::mogi;
  src.volume_change = 1e6;
  src.depth = 2000.0;
  const auto u0 = mogi_displacement(src, 0.0, 0.0, 0.25);
  CHECK(u0[2] == doctest::Approx(0.75e6 / (kPi * 4e6)).epsilon(1e-12));
  CHECK(u0[2] == doctest::Approx(0.0597).epsilon(1e-3));
  CHECK(u0[0] == 0.0);
  CHECK(u0[1] == 0.0);

  const double far = 50.0 * src.depth;
  const auto uf = mogi_displacement(src, far * std::cos(0.3), far * std::sin(0.3), 0.25);
  CHECK(std::hypot(uf[0], uf[1], uf[2]) < 0.01 * u0[2]);
}

TEST_CASE("mogi_los projects onto the line of sight and rejects other kinds") {
  SceneParams scene;
  DeformationSource src;
  src.kind = SourceKind::mogi;
  src.volume_change = 1e6;
  src.depth = 2000.0;
  const Grid los = mogi_los(src, scene);
  const EnuField enu = mogi_enu(src, scene);
  const auto e = los_unit_vector(scene);
  CHECK(std::abs(e[0] * e[0] + e[1] * e[1] + e[2] * e[2] - 1.0) < 1e-12);
  for (std::size_t k = 0; k < los.values.size(); k += 97) {
    CHECK(los.values[k] == doctest::Approx(e[0] * enu.east.values[k] + e[1] * enu.north.values[k] +
                                           e[2] * enu.up.values[k]));
  }
  src.kind = SourceKind::sill;
  CHECK_THROWS_AS(mogi_los(src, scene), ContractError);
}

TEST_CASE("dislocation with zero amplitude is a zero field") {
  SceneParams scene;
  for (SourceKind kind : {SourceKind::dyke, SourceKind::sill}) {
    DeformationSource src;
    src.kind = kind;
    src.length = 3000;
    src.width = 2000;
    src.peak_amplitude = 0.0;
    CHECK(dislocation_los(src, scene).max_abs() == 0.0);
  }
  DeformationSource mogi;
  mogi.kind = SourceKind::mogi;
  CHECK_THROWS_AS(dislocation_los(mogi, scene), ContractError);
}

TEST_CASE("dislocation peak |LOS| equals the requested amplitude") {
  SceneParams scene;
  for (SourceKind kind : {SourceKind::dyke, SourceKind::sill}) {
    DeformationSource src;
    src.kind = kind;
    src.length = 3500;
    src.width = 2200;
    src.strike = 33;
    src.dip = kind == SourceKind::dyke ? 80 : 10;
    src.depth = 1200;
    src.peak_amplitude = 0.17;
    CHECK(dislocation_los(src, scene).max_abs() == doctest::Approx(0.17).epsilon(1e-12));
  }
}

TEST_CASE("strike rotation by 90 degrees rotates the field on the grid") {
  SceneParams scene;
  DeformationSource src;
  src.kind = SourceKind::sill;
  src.length = 4000;
  src.width = 1500;
  src.depth = 2000;
  src.dip = 12;
  src.peak_amplitude = 0.2;
  src.strike = 0;
  const Grid base = dislocation_los(src, scene);
  src.strike = 90;
  CHECK(max_abs_diff(dislocation_los(src, scene), rotate_cw(base)) < 1e-6);

  // The dyke's LOS mixes horizontal motion, so compare the vertical pattern
  // shape and rotate the horizontal vectors with it.
  DeformationSource dyke = src;
  dyke.kind = SourceKind::dyke;
  dyke.dip = 75;
  dyke.strike = 0;
  EnuField f0 = dislocation_enu(dyke, scene);
  dyke.strike = 90;
  EnuField f1 = dislocation_enu(dyke, scene);
  const double s = f1.up.max_abs() / f0.up.max_abs();
  Grid up0 = rotate_cw(f0.up), east0 = rotate_cw(f0.north), north0 = rotate_cw(f0.east);
  for (double& v : north0.values) v = -v;
  for (Grid* g : {&up0, &east0, &north0})
    for (double& v : g->values) v *= s;
  CHECK(max_abs_diff(f1.up, up0) < 1e-6);
  CHECK(max_abs_diff(f1.east, east0) < 1e-6);
  CHECK(max_abs_diff(f1.north, north0) < 1e-6);
}

TEST_CASE("square sill is symmetric under a half turn") {
  SceneParams scene;
  DeformationSource src;
  src.kind = SourceKind::sill;
  src.length = 2500;
  src.width = 2500;
  src.depth = 1800;
  src.strike = 27;
  src.peak_amplitude = 0.15;
  const Grid g = dislocation_los(src, scene);
  const std::size_t n = g.size;
  double asym = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) asym = std::max(asym, std::abs(g(i, j) - g(n - 1 - i, n - 1 - j)));
  CHECK(asym < 1e-9);
}

TEST_CASE("synthesize_dem") {
  SceneParams scene;
  scene.rng_seed = 11;
  DemParams flat;
  flat.relief_min = flat.relief_max = 0.0;
  CHECK(synthesize_dem(scene, flat).max_abs() == 0.0);

  const Grid a = synthesize_dem(scene);
  const Grid b = synthesize_dem(scene);
  CHECK(a.values == b.values);
  double lo = 1e300, hi = -1e300;
  for (double v : a.values) lo = std::min(lo, v), hi = std::max(hi, v);
  CHECK(lo == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(hi == doctest::Approx(2000.0).epsilon(1e-9));

  scene.rng_seed = 12;
  CHECK(synthesize_dem(scene).values != a.values);
}

TEST_CASE("DEM periodogram follows the power law") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SceneParams scene;
    scene.rng_seed = seed;
    const double slope = periodogram_slope(synthesize_dem(scene));
    CAPTURE(seed);
    CHECK(std::abs(slope + 2.0) < 0.5);
  }
}

TEST_CASE("turbulent_aps") {
  SceneParams scene;
  scene.rng_seed = 5;
  AtmosphereParams atm;
  atm.turbulent_max_strength = 0.0;
  CHECK(turbulent_aps(atm, scene).max_abs() == 0.0);

  atm.turbulent_max_strength = 0.02;
  const Grid a = turbulent_aps(atm, scene);
  CHECK(a.values == turbulent_aps(atm, scene).values);
  CHECK(a.max_abs() == doctest::Approx(4 * kPi / scene.radar_wavelength * 0.02).epsilon(1e-12));

  atm.correlation_length = -1;
  CHECK_THROWS_AS(turbulent_aps(atm, scene), ConfigError);
}

TEST_CASE("correlated field autocorrelation at one correlation length") {
  // Exponential covariance: rho(L) = e^-1 at a lag of 50 pixels (5 km at 100 m).
  // Many pairs per realization; the 10 000-realization run lives in the acceptance suite.
  const std::size_t n = 64;
  const std::size_t lag = 50;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::uint64_t r = 0; r < 400; ++r) {
    const Grid f = correlated_field(n, 100.0, 5000.0, 1000 + r);
    for (std::size_t i = 0; i < n; i += 8)
      for (std::size_t j = 0; j + lag < n; j += 4) {
        const double pairs[2][2] = {{f(i, j), f(i, j + lag)}, {f(j, i), f(j + lag, i)}};
        for (const auto& p : pairs) sxy += p[0] * p[1], sxx += p[0] * p[0], syy += p[1] * p[1];
      }
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  CAPTURE(rho);
  CHECK(std::abs(rho - std::exp(-1.0)) < 0.1);
}

TEST_CASE("topo_aps") {
  Grid dem(8, 1000.0);
  CHECK(topo_aps(dem, 0.0).max_abs() == 0.0);
  for (double v : topo_aps(dem, 2.0).values) CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
  SceneParams scene;
  scene.rng_seed = 9;
  const Grid real = synthesize_dem(scene);
  const Grid one = topo_aps(real, 1.3), two = topo_aps(real, 2.6);
  for (std::size_t k = 0; k < one.values.size(); ++k) REQUIRE(two.values[k] == doctest::Approx(2 * one.values[k]));
}

TEST_CASE("incoherence mask coverage is exact") {
  SceneParams scene;
  for (double cov : {0.0, 0.15, 0.5}) {
    const Mask m = incoherence_mask(scene, cov, 3);
    std::size_t on = 0;
    for (auto v : m) on += v;
    CHECK(on == static_cast<std::size_t>(std::lround(cov * 64 * 64)));
  }
}

TEST_CASE("compose examples") {
  SceneParams scene;
  scene.grid_size = 16;
  PhaseComponents zero;
  zero.deformation_los = Grid(16);
  zero.turbulent = Grid(16);
  zero.topographic = Grid(16);
  zero.ramp = Grid(16);
  const Interferogram z = compose(zero, scene, 1);
  CHECK(z.label == 0);
  CHECK(z.phase.max_abs() == 0.0);

  PhaseComponents half = zero;
  half.deformation_kind = SourceKind::mogi;
  half.deformation_los = Grid(16, scene.radar_wavelength / 2);
  const Interferogram h = compose(half, scene, 1);
  CHECK(h.label == 1);
  CHECK(h.phase.max_abs() < 1e-9);

  PhaseComponents bad = zero;
  bad.ramp = Grid(15);
  CHECK_THROWS_AS(compose(bad, scene, 1), DimensionError);
}

TEST_CASE("compose is independent of term order") {
  SceneParams scene;
  scene.rng_seed = 21;
  AtmosphereParams atm;
  const Grid t = turbulent_aps(atm, scene);
  const Grid p = topo_aps(synthesize_dem(scene), 1.7);
  const Grid r = linear_ramp(scene, 0.03, -0.02);
  DeformationSource src;
  src.kind = SourceKind::mogi;
  src.volume_change = 2e6;
  src.depth = 2500;
  const Grid d = mogi_los(src, scene);
  // Deformation enters with the -4pi/lambda factor; convert an APS grid into
  // an equivalent displacement so every slot can be permuted.
  const double k = -4 * kPi / scene.radar_wavelength;
  auto as_los = [&](const Grid& g) {
    Grid out = g;
    for (double& v : out.values) v /= k;
    return out;
  };
  auto as_phase = [&](const Grid& g) {
    Grid out = g;
    for (double& v : out.values) v *= k;
    return out;
  };
  PhaseComponents a;
  a.deformation_kind = SourceKind::mogi;
  a.deformation_los = d, a.turbulent = t, a.topographic = p, a.ramp = r;
  PhaseComponents b = a;
  b.turbulent = r, b.topographic = t, b.ramp = p;
  PhaseComponents c = a;
  c.deformation_los = as_los(as_phase(d));
  c.turbulent = p, c.topographic = r, c.ramp = t;
  const auto pa = compose(a, scene, 4).phase.values;
  CHECK(pa == compose(b, scene, 4).phase.values);
  CHECK(pa == compose(c, scene, 4).phase.values);
}

TEST_CASE("generate_dataset counts, ranges and labels") {
  const Dataset neg = generate_dataset(0, 5, DomainProfile::source, 1);
  REQUIRE(neg.size() == 5);
  CHECK(neg.count_label(0) == 5);

  const Dataset ds = generate_dataset(30, 20, DomainProfile::source, 42);
  REQUIRE(ds.size() == 50);
  CHECK(ds.count_label(1) == 30);
  CHECK(ds.count_label(0) == 20);
  REQUIRE(ds.manifest.samples.size() == 50);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    REQUIRE(s.phase.size() == 64 * 64);
    for (float v : s.phase) REQUIRE((v >= -kPi && v < kPi));
    const double peak = std::stod(manifest_value(ds.manifest.samples[i], "los_peak"));
    const std::string kind = manifest_value(ds.manifest.samples[i], "kind");
    if (s.label == 1) {
      CHECK(kind != "none");
      CHECK(peak >= 0.10 - 1e-12);
      CHECK(peak <= 0.25 + 1e-12);
    } else {
      CHECK(kind == "none");
      CHECK(peak == 0.0);
    }
    CHECK(std::stod(manifest_value(ds.manifest.samples[i], "incoherence_fraction")) == 0.0);
  }

  const Dataset tgt = generate_dataset(10, 10, DomainProfile::target, 42);
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    const double peak = std::stod(manifest_value(tgt.manifest.samples[i], "los_peak"));
    if (tgt.samples[i].label == 1) {
      CHECK(peak >= 0.05 - 1e-12);
      CHECK(peak <= 0.15 + 1e-12);
    }
    CHECK(std::stod(manifest_value(tgt.manifest.samples[i], "incoherence_fraction")) ==
          doctest::Approx(0.15).epsilon(1e-3));
  }
}

TEST_CASE("dataset files are deterministic and round-trip") {
  const std::string p1 = temp_path("a.bin"), p2 = temp_path("b.bin");
  write_dataset(p1, generate_dataset(4, 3, DomainProfile::target, 99));
  write_dataset(p2, generate_dataset(4, 3, DomainProfile::target, 99));
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(manifest_path(p1)) == slurp(manifest_path(p2)));
  CHECK(slurp(p1).substr(0, 8) == "PINSAR01");
  CHECK(slurp(p1).size() == 8 + 4 + 4 + 1 + 7 * (8 + 1 + 64 * 64 * 4));

  const Dataset orig = generate_dataset(4, 3, DomainProfile::target, 99);
  const Dataset back = read_dataset(p1);
  REQUIRE(back.size() == orig.size());
  CHECK(back.grid_size == 64);
  CHECK(back.labeled);
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(back.samples[i].seed == orig.samples[i].seed);
    CHECK(back.samples[i].label == orig.samples[i].label);
    CHECK(back.samples[i].phase == orig.samples[i].phase);
  }
  CHECK(back.manifest.header == orig.manifest.header);
  CHECK(back.manifest.samples == orig.manifest.samples);

  CHECK(generate_dataset(4, 3, DomainProfile::target, 100).samples[0].phase != orig.samples[0].phase);

  // Corruptions surface as data errors.
  std::string bytes = slurp(p1);
  {
    std::ofstream os(p2, std::ios::binary | std::ios::trunc);
    os << "NOTMAGIC" << bytes.substr(8);
  }
  CHECK_THROWS_AS(read_dataset(p2), DataError);
  {
    std::ofstream os(p2, std::ios::binary | std::ios::trunc);
    os << bytes.substr(0, bytes.size() - 10);
  }
  CHECK_THROWS_AS(read_dataset(p2), DataError);
  CHECK_THROWS_AS(read_dataset(temp_path("missing.bin")), DataError);
  for (const auto& p : {p1, p2}) {
    std::filesystem::remove(p);
    std::filesystem::remove(manifest_path(p));
  }
}

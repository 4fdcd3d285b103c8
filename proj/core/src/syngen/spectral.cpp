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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <tuple>

#include "pinsar/syngen/atmosphere.hpp"
#include "pinsar/syngen/seed.hpp"

namespace pinsar::syngen {

namespace {

constexpr std::uint64_t kDemSalt = 0xd3;
constexpr std::uint64_t kTurbulenceSalt = 0x7b;

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place 2-D complex transform of an n x n buffer.
class Fft2d {
 public:
  Fft2d(std::size_t n, int sign) : n_(n) {
    data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), data_, data_, sign, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(data_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_); }
  void execute() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* data_ = nullptr;
  fftw_plan plan_ = nullptr;
};

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Signed frequency index of bin k on an n-point transform.
double freq_index(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
}

// Eigenvalues of the circulant covariance, shared across realizations.
std::shared_ptr<const std::vector<double>> circulant_spectrum(std::size_t padded, double spacing,
                                                              double correlation_length) {
  using Key = std::tuple<std::size_t, double, double>;
  static std::mutex cache_mutex;
  static std::map<Key, std::shared_ptr<const std::vector<double>>> cache;
  const Key key{padded, spacing, correlation_length};
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Fft2d fft(padded, FFTW_FORWARD);
  auto* buf = fft.data();
  for (std::size_t i = 0; i < padded; ++i)
    for (std::size_t j = 0; j < padded; ++j) {
      const double di = freq_index(i, padded);
      const double dj = freq_index(j, padded);
      const double r = spacing * std::sqrt(di * di + dj * dj);
      buf[i * padded + j] = std::exp(-r / correlation_length);
    }
  fft.execute();
  auto eig = std::make_shared<std::vector<double>>(padded * padded);
  for (std::size_t k = 0; k < eig->size(); ++k) (*eig)[k] = std::max(0.0, buf[k].real());
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(key, eig);
  return eig;
}

// Plans are reusable; keep one per transform size and direction on each thread.
Fft2d& cached_fft(std::size_t n, int sign) {
  thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<Fft2d>> plans;
  auto& slot = plans[{n, sign}];
  if (!slot) slot = std::make_unique<Fft2d>(n, sign);
  return *slot;
}

}  // namespace

Grid synthesize_dem(const SceneParams& scene, const DemParams& dem) {
  scene.validate();
  if (dem.relief_max < dem.relief_min) throw ConfigError("relief_max must be >= relief_min");
  const std::size_t n = scene.grid_size;
  Grid out(n, dem.relief_min);
  if (dem.relief_max == dem.relief_min) return out;

  std::mt19937_64 rng(derive_seed(scene.rng_seed, kDemSalt));
  std::normal_distribution<double> normal(0.0, 1.0);
  Fft2d& fwd = cached_fft(n, FFTW_FORWARD);
  auto* buf = fwd.data();
  for (std::size_t k = 0; k < n * n; ++k) buf[k] = {normal(rng), 0.0};
  fwd.execute();
  const double half_beta = 0.5 * dem.spectral_exponent;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double fi = freq_index(i, n) / static_cast<double>(n);
      const double fj = freq_index(j, n) / static_cast<double>(n);
      const double k = std::sqrt(fi * fi + fj * fj);
      buf[i * n + j] *= k > 0 ? std::pow(k, -half_beta) : 0.0;
    }
  Fft2d& inv = cached_fft(n, FFTW_BACKWARD);
  std::copy_n(buf, n * n, inv.data());
  inv.execute();
  const auto* res = inv.data();
  double lo = res[0].real(), hi = res[0].real();
  for (std::size_t k = 0; k < n * n; ++k) {
    lo = std::min(lo, res[k].real());
    hi = std::max(hi, res[k].real());
  }
  const double span = hi - lo;
  for (std::size_t k = 0; k < n * n; ++k) {
    const double t = span > 0 ? (res[k].real() - lo) / span : 0.0;
    out.values[k] = dem.relief_min + t * (dem.relief_max - dem.relief_min);
  }
  return out;
}

Grid correlated_field(std::size_t grid_size, double pixel_spacing, double correlation_length, std::uint64_t seed) {
  if (!(correlation_length > 0)) throw ConfigError("correlation_length must be positive");
  if (!(pixel_spacing > 0)) throw ConfigError("pixel_spacing must be positive");
  const auto reach = static_cast<std::size_t>(std::ceil(2.0 * correlation_length / pixel_spacing));
  const std::size_t padded = next_pow2(std::max(2 * grid_size, grid_size + reach));
  const auto eig = circulant_spectrum(padded, pixel_spacing, correlation_length);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Fft2d& fft = cached_fft(padded, FFTW_FORWARD);
  auto* buf = fft.data();
  const double norm = 1.0 / static_cast<double>(padded * padded);
  for (std::size_t k = 0; k < padded * padded; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    buf[k] = std::sqrt((*eig)[k] * norm) * std::complex<double>(re, im);
  }
  fft.execute();
  Grid out(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i)
    for (std::size_t j = 0; j < grid_size; ++j) out(i, j) = buf[i * padded + j].real();
  return out;
}

Grid turbulent_aps(const AtmosphereParams& atmosphere, const SceneParams& scene) {
  scene.validate();
  atmosphere.validate();
  const std::size_t n = scene.grid_size;
  if (atmosphere.turbulent_max_strength == 0.0) return Grid(n);
  Grid f = correlated_field(n, scene.pixel_spacing, atmosphere.correlation_length,
                            derive_seed(scene.rng_seed, kTurbulenceSalt));
  const double peak = f.max_abs();
  const double to_phase = 4.0 * std::numbers::pi / scene.radar_wavelength;
  const double s = peak > 0 ? atmosphere.turbulent_max_strength / peak * to_phase : 0.0;
  for (double& v : f.values) v *= s;
  return f;
}

Grid topo_aps(const Grid& dem, double coupling) {
  Grid out(dem.size);
  for (std::size_t k = 0; k < dem.values.size(); ++k) out.values[k] = coupling * (dem.values[k] / 1000.0);
  return out;
}

Grid linear_ramp(const SceneParams& scene, double ramp_a, double ramp_b) {
  const std::size_t n = scene.grid_size;
  const double c = 0.5 * static_cast<double>(n - 1);
  Grid out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = ramp_a * (static_cast<double>(j) - c) + ramp_b * (static_cast<double>(i) - c);
  return out;
}

Mask incoherence_mask(const SceneParams& scene, double coverage, std::uint64_t seed) {
  if (!(coverage >= 0.0 && coverage <= 1.0)) throw ConfigError("incoherence coverage must lie in [0, 1]");
  const std::size_t n = scene.grid_size;
  Mask mask(n * n, 0);
  const auto count = static_cast<std::size_t>(std::lround(coverage * static_cast<double>(n * n)));
  if (count == 0) return mask;
  const Grid field = correlated_field(n, scene.pixel_spacing, 8.0 * scene.pixel_spacing, seed);
  std::vector<std::size_t> order(n * n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return field.values[a] > field.values[b]; });
  for (std::size_t k = 0; k < count; ++k) mask[order[k]] = 1;
  return mask;
}

}  // namespace pinsar::syngen

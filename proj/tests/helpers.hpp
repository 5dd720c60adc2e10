#pragma once

#include <numeric>
#include <random>
#include <vector>

#include "spect/geometry.hpp"
#include "spect/projector.hpp"
#include "spect/volume.hpp"

namespace testing {

inline std::vector<int> all_views(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Cubic grid of n voxels per side matching an n x n detector.
inline spect::SystemModel make_model(int n, int n_views, float mu, double sigma0, double slope,
                                     double pitch = 4.0, int n_windows = 1) {
  spect::SystemModel m;
  m.geometry = spect::make_geometry(n_views, spect::CircularOrbit{n * pitch}, n, n, pitch, n_windows);
  m.mu_map = spect::ImageVolume(n, n, n, {pitch, pitch, pitch}, mu);
  m.psf_sigma0_mm = sigma0;
  m.psf_slope = slope;
  return m;
}

inline void fill_uniform(std::vector<float>& v, std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  for (auto& x : v) x = d(rng);
}

}  // namespace testing

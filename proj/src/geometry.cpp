#include "spect/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spect {

SinCos sincos_deg(double deg) {
  double const quarters = deg / 90.0;
  double const rounded = std::round(quarters);
  if (quarters == rounded) {
    switch (((static_cast<long long>(rounded) % 4) + 4) % 4) {
      case 0: return {0.0, 1.0};
      case 1: return {1.0, 0.0};
      case 2: return {0.0, -1.0};
      default: return {-1.0, 0.0};
    }
  }
  double const rad = deg * std::numbers::pi / 180.0;
  return {std::sin(rad), std::cos(rad)};
}

double ScanGeometry::max_radial_mm() const {
  if (radial_mm.empty()) return 0.0;
  return *std::max_element(radial_mm.begin(), radial_mm.end());
}

void ScanGeometry::validate() const {
  if (n_views() < 2) throw std::invalid_argument("geometry: need at least 2 views");
  if (radial_mm.size() != view_angles_deg.size())
    throw std::invalid_argument("geometry: radial_mm length differs from view count");
  for (std::size_t i = 1; i < view_angles_deg.size(); ++i)
    if (!(view_angles_deg[i] > view_angles_deg[i - 1]))
      throw std::invalid_argument("geometry: view angles must be strictly ascending");
  if (view_angles_deg.front() < 0.0 || view_angles_deg.back() >= 360.0)
    throw std::invalid_argument("geometry: view angles must lie in [0, 360)");
  for (double r : radial_mm)
    if (!(r > 0.0)) throw std::invalid_argument("geometry: radial positions must be positive");
  if (det_nu < 8 || det_nv < 8) throw std::invalid_argument("geometry: detector must be at least 8x8");
  if (!(det_pixel_mm > 0.0)) throw std::invalid_argument("geometry: pixel pitch must be positive");
  if (n_windows < 1) throw std::invalid_argument("geometry: need at least one energy window");
}

ScanGeometry make_geometry(int n_views, const Orbit& orbit, int det_nu, int det_nv,
                           double det_pixel_mm, int n_windows) {
  if (n_views < 2) throw std::invalid_argument("make_geometry: n_views must be >= 2");
  if (det_nu <= 0 || det_nv <= 0 || !(det_pixel_mm > 0.0) || n_windows <= 0)
    throw std::invalid_argument("make_geometry: dimensions must be positive");

  ScanGeometry g;
  g.det_nu = det_nu;
  g.det_nv = det_nv;
  g.det_pixel_mm = det_pixel_mm;
  g.n_windows = n_windows;
  g.view_angles_deg.resize(n_views);
  g.radial_mm.resize(n_views);
  for (int v = 0; v < n_views; ++v) {
    double const angle = 360.0 * v / n_views;
    g.view_angles_deg[v] = angle;
    if (auto const* c = std::get_if<CircularOrbit>(&orbit)) {
      if (!(c->radius_mm > 0.0)) throw std::invalid_argument("make_geometry: orbit radius must be positive");
      g.radial_mm[v] = c->radius_mm;
    } else {
      auto const& e = std::get<EllipticalOrbit>(orbit);
      if (!(e.semi_x_mm > 0.0) || !(e.semi_y_mm > 0.0) || e.clearance_mm < 0.0)
        throw std::invalid_argument("make_geometry: orbit semi-axes must be positive");
      // Support function along the detector normal (sin, cos).
      auto const sc = sincos_deg(angle);
      double const hx = e.semi_x_mm * sc.sin;
      double const hy = e.semi_y_mm * sc.cos;
      g.radial_mm[v] = std::sqrt(hx * hx + hy * hy) + e.clearance_mm;
    }
  }
  g.validate();
  return g;
}

ViewSplit split_views(const ScanGeometry& geometry, int df) {
  int const n = geometry.n_views();
  if (df < 1 || df > n) throw std::invalid_argument("split_views: df must lie in [1, n_views]");
  ViewSplit split;
  split.df = df;
  for (int v = 0; v < n; ++v) (v % df == 0 ? split.measured : split.skipped).push_back(v);
  return split;
}

std::vector<CoordinateSample> coordinate_grid(const ScanGeometry& geometry, int view,
                                              int upsample) {
  if (view < 0 || view >= geometry.n_views())
    throw std::invalid_argument("coordinate_grid: view " + std::to_string(view) + " out of range");
  if (upsample < 1) throw std::invalid_argument("coordinate_grid: upsample must be >= 1");

  int const nu = geometry.det_nu * upsample;
  int const nv = geometry.det_nv * upsample;
  auto const sc = sincos_deg(geometry.view_angles_deg[view]);
  float const r = static_cast<float>(geometry.radial_mm[view] / geometry.max_radial_mm());

  std::vector<CoordinateSample> out(static_cast<std::size_t>(nu) * nv);
  for (int row = 0; row < nv; ++row) {
    float const v = static_cast<float>((row + 0.5) / nv * 2.0 - 1.0);
    for (int col = 0; col < nu; ++col) {
      auto& s = out[static_cast<std::size_t>(row) * nu + col];
      s.u = static_cast<float>((col + 0.5) / nu * 2.0 - 1.0);
      s.v = v;
      s.sin_theta = static_cast<float>(sc.sin);
      s.cos_theta = static_cast<float>(sc.cos);
      s.r = r;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const ScanGeometry& g) {
  j = nlohmann::json{{"view_angles_deg", g.view_angles_deg},
                     {"radial_mm", g.radial_mm},
                     {"det_nu", g.det_nu},
                     {"det_nv", g.det_nv},
                     {"det_pixel_mm", g.det_pixel_mm},
                     {"n_windows", g.n_windows}};
}

void from_json(const nlohmann::json& j, ScanGeometry& g) {
  j.at("view_angles_deg").get_to(g.view_angles_deg);
  j.at("radial_mm").get_to(g.radial_mm);
  j.at("det_nu").get_to(g.det_nu);
  j.at("det_nv").get_to(g.det_nv);
  j.at("det_pixel_mm").get_to(g.det_pixel_mm);
  j.at("n_windows").get_to(g.n_windows);
}

}  // namespace spect

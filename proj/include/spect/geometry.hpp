#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <json.hpp>

namespace spect {

struct CircularOrbit {
  double radius_mm = 250.0;
};

/// Detector distance follows the support function of an ellipse (x and y
/// semi-axes) plus a fixed clearance.
struct EllipticalOrbit {
  double semi_x_mm = 200.0;
  double semi_y_mm = 150.0;
  double clearance_mm = 0.0;
};

using Orbit = std::variant<CircularOrbit, EllipticalOrbit>;

/// Parallel-hole acquisition geometry. The detector normal at view angle
/// theta points along (sin theta, cos theta) in the image x-y plane; u runs
/// along (cos theta, -sin theta) and v along the axial (z) direction.
struct ScanGeometry {
  std::vector<double> view_angles_deg;
  std::vector<double> radial_mm;
  int det_nu = 0;
  int det_nv = 0;
  double det_pixel_mm = 0.0;
  int n_windows = 1;

  int n_views() const { return static_cast<int>(view_angles_deg.size()); }
  std::size_t pixels_per_view() const {
    return static_cast<std::size_t>(det_nu) * static_cast<std::size_t>(det_nv);
  }
  double max_radial_mm() const;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  bool operator==(const ScanGeometry&) const = default;
};

/// sin/cos of an angle in degrees, exact at multiples of 90.
struct SinCos {
  double sin;
  double cos;
};
SinCos sincos_deg(double deg);

ScanGeometry make_geometry(int n_views, const Orbit& orbit, int det_nu, int det_nv,
                           double det_pixel_mm, int n_windows);

struct ViewSplit {
  int df = 1;
  std::vector<int> measured;
  std::vector<int> skipped;
};

/// Keeps every df-th view starting at view 0.
ViewSplit split_views(const ScanGeometry& geometry, int df);

/// Field-model input for one detector pixel.
struct CoordinateSample {
  float u = 0.0f;
  float v = 0.0f;
  float sin_theta = 0.0f;
  float cos_theta = 1.0f;
  float r = 1.0f;

  bool operator==(const CoordinateSample&) const = default;
};

/// (det_nv*upsample) x (det_nu*upsample) samples, row-major (v outer, u inner).
std::vector<CoordinateSample> coordinate_grid(const ScanGeometry& geometry, int view,
                                              int upsample);

void to_json(nlohmann::json& j, const ScanGeometry& g);
void from_json(const nlohmann::json& j, ScanGeometry& g);

}  // namespace spect

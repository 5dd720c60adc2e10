#include <cmath>
#include <stdexcept>

#include "spect/projector.hpp"

namespace spect::reference {

namespace {

struct Frame {
  int nx, ny, nz;
  double cx, cy, pitch;
};

// Bilinear sample of one axial slice at a rotated-frame grid point; calls
// visit(index, weight) for each in-bounds neighbour.
template <typename Visit>
void bilinear(const Frame& f, const SinCos& sc, int i, int j, Visit&& visit) {
  auto snap = [](double v) {
    double const r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };
  double const xr = i - f.cx;
  double const yr = j - f.cy;
  double const fx = snap(f.cx + xr * sc.cos + yr * sc.sin);
  double const fy = snap(f.cy - xr * sc.sin + yr * sc.cos);
  int const x0 = static_cast<int>(std::floor(fx));
  int const y0 = static_cast<int>(std::floor(fy));
  double const ax = fx - x0;
  double const ay = fy - y0;
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      int const xx = x0 + dx, yy = y0 + dy;
      if (xx < 0 || yy < 0 || xx >= f.nx || yy >= f.ny) continue;
      double const w = (dx ? ax : 1 - ax) * (dy ? ay : 1 - ay);
      visit(static_cast<std::size_t>(yy) * f.nx + xx, w);
    }
}

// Transmission from rotated-frame voxel (i, j, z) to the detector.
double transmission(const SystemModel& m, const Frame& f, const SinCos& sc, int i, int j, int z) {
  std::size_t const slice = static_cast<std::size_t>(f.nx) * f.ny;
  double path = 0.0;
  for (int jj = j; jj < f.ny; ++jj) {
    double mu = 0.0;
    bilinear(f, sc, i, jj, [&](std::size_t idx, double w) { mu += w * m.mu_map.values[z * slice + idx]; });
    path += (jj == j ? 0.5 : 1.0) * mu;
  }
  return std::exp(-f.pitch * path);
}

double gauss_weight(double sigma_px, int du, int dv) {
  if (!(sigma_px > 1e-6)) return (du == 0 && dv == 0) ? 1.0 : 0.0;
  int const half = static_cast<int>(std::ceil(4.0 * sigma_px));
  if (std::abs(du) > half || std::abs(dv) > half) return 0.0;
  double norm = 0.0;
  for (int k = -half; k <= half; ++k) norm += std::exp(-0.5 * k * k / (sigma_px * sigma_px));
  return std::exp(-0.5 * du * du / (sigma_px * sigma_px)) / norm *
         std::exp(-0.5 * dv * dv / (sigma_px * sigma_px)) / norm;
}

Frame frame_of(const SystemModel& m) {
  m.validate();
  return {m.mu_map.nx, m.mu_map.ny, m.mu_map.nz, 0.5 * (m.mu_map.nx - 1), 0.5 * (m.mu_map.ny - 1),
          m.geometry.det_pixel_mm};
}

// Visits every (detector pixel, voxel, weight) triple of one view's rows of A.
template <typename Visit>
void for_each_element(const SystemModel& m, int view, Visit&& visit) {
  Frame const f = frame_of(m);
  auto const sc = sincos_deg(m.geometry.view_angles_deg[view]);
  std::size_t const slice = static_cast<std::size_t>(f.nx) * f.ny;
  double const scale = m.calibration * f.pitch;
  for (int z = 0; z < f.nz; ++z)
    for (int j = 0; j < f.ny; ++j) {
      double const depth = std::max(0.0, m.geometry.radial_mm[view] - (j - f.cy) * f.pitch);
      double const sigma_px = psf_sigma(depth, m) / f.pitch;
      int const half = sigma_px > 1e-6 ? static_cast<int>(std::ceil(4.0 * sigma_px)) : 0;
      for (int i = 0; i < f.nx; ++i) {
        double const t = transmission(m, f, sc, i, j, z);
        bilinear(f, sc, i, j, [&](std::size_t idx, double w) {
          for (int dv = -half; dv <= half; ++dv)
            for (int du = -half; du <= half; ++du) {
              int const u = i + du, v = z + dv;
              if (u < 0 || v < 0 || u >= f.nx || v >= f.nz) continue;
              double const g = gauss_weight(sigma_px, du, dv);
              visit(static_cast<std::size_t>(v) * f.nx + u, z * slice + idx, scale * t * w * g);
            }
        });
      }
    }
}

}  // namespace

ProjectionStack forward_project(const ImageVolume& x, const SystemModel& model,
                                std::span<const int> views) {
  if (x.nx != model.mu_map.nx || x.ny != model.mu_map.ny || x.nz != model.mu_map.nz)
    throw std::invalid_argument("reference::forward_project: dims mismatch");
  ProjectionStack out(model.geometry, {views.begin(), views.end()}, 1, ProjectionKind::Mean);
  for (std::size_t s = 0; s < views.size(); ++s) {
    std::vector<double> acc(out.pixels_per_view(), 0.0);
    for_each_element(model, views[s], [&](std::size_t pix, std::size_t vox, double a) {
      acc[pix] += a * x.values[vox];
    });
    auto dst = out.view(0, static_cast<int>(s));
    for (std::size_t k = 0; k < acc.size(); ++k) dst[k] = static_cast<float>(acc[k]);
  }
  return out;
}

ImageVolume back_project(const ProjectionStack& p, const SystemModel& model,
                         std::span<const int> views) {
  std::vector<double> acc(model.mu_map.size(), 0.0);
  for (int view : views) {
    int const slot = p.slot_of(view);
    if (slot < 0) throw std::invalid_argument("reference::back_project: view missing");
    auto src = p.view(0, slot);
    for_each_element(model, view, [&](std::size_t pix, std::size_t vox, double a) {
      acc[vox] += a * src[pix];
    });
  }
  ImageVolume out(model.mu_map.nx, model.mu_map.ny, model.mu_map.nz, model.mu_map.voxel_mm);
  for (std::size_t k = 0; k < acc.size(); ++k) out.values[k] = static_cast<float>(acc[k]);
  return out;
}

}  // namespace spect::reference

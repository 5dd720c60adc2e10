#include "spect/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace spect {

namespace {

bool inside_ellipsoid(const std::array<double, 3>& semi, double x, double y, double z) {
  double const a = x / semi[0];
  double const b = y / semi[1];
  double const c = z / semi[2];
  return a * a + b * b + c * c <= 1.0;
}

double center_of(int i, int n, double pitch) { return (i - 0.5 * (n - 1)) * pitch; }

}  // namespace

double sphere_radius_from_volume(double volume_ml) {
  if (volume_ml < 0.0) throw std::invalid_argument("sphere_radius_from_volume: negative volume");
  return std::cbrt(3.0 * volume_ml * 1000.0 / (4.0 * std::numbers::pi));
}

PhantomSpec PhantomSpec::standard() {
  PhantomSpec spec;
  double const volumes[] = {114.0, 30.0, 16.0, 8.0, 4.0, 2.0};
  for (int k = 0; k < 6; ++k) {
    double const phi = k * std::numbers::pi / 3.0;
    SphereInsert s;
    char name[32];
    std::snprintf(name, sizeof(name), "sphere_%gml", volumes[k]);
    s.name = name;
    s.center_mm = {65.0 * std::cos(phi), 65.0 * std::sin(phi), 0.0};
    s.volume_ml = volumes[k];
    s.conc_mbq_per_ml = 0.22;
    spec.spheres.push_back(s);
  }
  return spec;
}

void PhantomSpec::validate() const {
  for (double a : semi_axes_mm)
    if (!(a > 0.0)) throw std::invalid_argument("phantom: semi-axes must be positive");
  if (background_conc_mbq_per_ml < 0.0 || mu_body_per_mm < 0.0)
    throw std::invalid_argument("phantom: concentrations and mu must be nonnegative");
  // Golden-spiral sampling of each sphere surface.
  constexpr int kSurface = 400;
  double const golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (auto const& s : spheres) {
    if (s.conc_mbq_per_ml < 0.0) throw std::invalid_argument("phantom: sphere concentration < 0");
    double const r = sphere_radius_from_volume(s.volume_ml);
    for (int i = 0; i < kSurface; ++i) {
      double const z = 1.0 - 2.0 * (i + 0.5) / kSurface;
      double const rho = std::sqrt(1.0 - z * z);
      double const phi = golden * i;
      if (!inside_ellipsoid(semi_axes_mm, s.center_mm[0] + r * rho * std::cos(phi),
                            s.center_mm[1] + r * rho * std::sin(phi), s.center_mm[2] + r * z))
        throw std::invalid_argument("phantom: sphere '" + s.name + "' extends outside the body");
    }
  }
}

Phantom build_phantom(const PhantomSpec& spec, std::array<int, 3> dims,
                      std::array<double, 3> voxel_mm, int subsamples) {
  spec.validate();
  if (subsamples < 1) throw std::invalid_argument("build_phantom: subsamples must be >= 1");
  auto const [nx, ny, nz] = dims;
  for (int d = 0; d < 3; ++d) {
    double const half_extent = 0.5 * dims[d] * voxel_mm[d];
    if (spec.semi_axes_mm[d] > half_extent)
      throw std::invalid_argument("build_phantom: grid too small for the body");
  }

  Phantom ph;
  ph.activity = ImageVolume(nx, ny, nz, voxel_mm);
  ph.mu_map = ImageVolume(nx, ny, nz, voxel_mm);

  std::size_t const n_spheres = spec.spheres.size();
  std::vector<double> radii(n_spheres);
  for (std::size_t k = 0; k < n_spheres; ++k) radii[k] = sphere_radius_from_volume(spec.spheres[k].volume_ml);

  for (std::size_t k = 0; k < n_spheres; ++k) {
    VoiMask m;
    m.name = spec.spheres[k].name;
    m.role = VoiMask::Role::Sphere;
    m.nx = nx;
    m.ny = ny;
    m.nz = nz;
    m.inside.assign(ph.activity.size(), 0);
    ph.masks.push_back(std::move(m));
  }

  double const voxel_ml = voxel_mm[0] * voxel_mm[1] * voxel_mm[2] / 1000.0;
  int const n_sub = subsamples * subsamples * subsamples;
  std::vector<int> sphere_hits(n_spheres);
  std::vector<unsigned char> body_center(ph.activity.size(), 0);

#pragma omp parallel for schedule(static) firstprivate(sphere_hits)
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        double const cx = center_of(x, nx, voxel_mm[0]);
        double const cy = center_of(y, ny, voxel_mm[1]);
        double const cz = center_of(z, nz, voxel_mm[2]);
        std::fill(sphere_hits.begin(), sphere_hits.end(), 0);
        int body_hits = 0;
        double conc_sum = 0.0;
        for (int sz = 0; sz < subsamples; ++sz)
          for (int sy = 0; sy < subsamples; ++sy)
            for (int sx = 0; sx < subsamples; ++sx) {
              double const px = cx + ((sx + 0.5) / subsamples - 0.5) * voxel_mm[0];
              double const py = cy + ((sy + 0.5) / subsamples - 0.5) * voxel_mm[1];
              double const pz = cz + ((sz + 0.5) / subsamples - 0.5) * voxel_mm[2];
              if (!inside_ellipsoid(spec.semi_axes_mm, px, py, pz)) continue;
              ++body_hits;
              double conc = spec.background_conc_mbq_per_ml;
              for (std::size_t k = 0; k < n_spheres; ++k) {
                auto const& c = spec.spheres[k].center_mm;
                double const dx = px - c[0], dy = py - c[1], dz = pz - c[2];
                if (dx * dx + dy * dy + dz * dz <= radii[k] * radii[k]) {
                  ++sphere_hits[k];
                  conc = spec.spheres[k].conc_mbq_per_ml;
                  break;
                }
              }
              conc_sum += conc;
            }
        std::size_t const idx = ph.activity.index(x, y, z);
        ph.activity.values[idx] = static_cast<float>(conc_sum / n_sub * voxel_ml);
        ph.mu_map.values[idx] = static_cast<float>(spec.mu_body_per_mm * body_hits / n_sub);
        body_center[idx] = inside_ellipsoid(spec.semi_axes_mm, cx, cy, cz) ? 1 : 0;
        for (std::size_t k = 0; k < n_spheres; ++k)
          ph.masks[k].inside[idx] = 2 * sphere_hits[k] > n_sub ? 1 : 0;
      }
    }
  }

  // Background: body voxels whose 2-voxel neighbourhood lies in the body and
  // whose center is more than 2 voxels from every sphere surface.
  int constexpr kMargin = 2;
  double const margin_mm = kMargin * std::max({voxel_mm[0], voxel_mm[1], voxel_mm[2]});
  VoiMask bkg;
  bkg.name = "background";
  bkg.role = VoiMask::Role::Background;
  bkg.nx = nx;
  bkg.ny = ny;
  bkg.nz = nz;
  bkg.inside.assign(ph.activity.size(), 0);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        bool ok = body_center[ph.activity.index(x, y, z)] != 0;
        for (int dz = -kMargin; ok && dz <= kMargin; ++dz)
          for (int dy = -kMargin; ok && dy <= kMargin; ++dy)
            for (int dx = -kMargin; ok && dx <= kMargin; ++dx) {
              if (dx * dx + dy * dy + dz * dz > kMargin * kMargin) continue;
              int const xx = x + dx, yy = y + dy, zz = z + dz;
              if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz ||
                  !body_center[ph.activity.index(xx, yy, zz)])
                ok = false;
            }
        if (!ok) continue;
        double const cx = center_of(x, nx, voxel_mm[0]);
        double const cy = center_of(y, ny, voxel_mm[1]);
        double const cz = center_of(z, nz, voxel_mm[2]);
        for (std::size_t k = 0; ok && k < n_spheres; ++k) {
          auto const& c = spec.spheres[k].center_mm;
          double const d = std::sqrt((cx - c[0]) * (cx - c[0]) + (cy - c[1]) * (cy - c[1]) +
                                     (cz - c[2]) * (cz - c[2]));
          if (d - radii[k] <= margin_mm) ok = false;
        }
        bkg.inside[ph.activity.index(x, y, z)] = ok ? 1 : 0;
      }
  ph.masks.push_back(std::move(bkg));
  return ph;
}

void to_json(nlohmann::json& j, const PhantomSpec& s) {
  j = nlohmann::json{{"semi_axes_mm", s.semi_axes_mm},
                     {"background_conc_mbq_per_ml", s.background_conc_mbq_per_ml},
                     {"mu_body_per_mm", s.mu_body_per_mm},
                     {"spheres", nlohmann::json::array()}};
  for (auto const& sp : s.spheres)
    j["spheres"].push_back({{"name", sp.name},
                            {"center_mm", sp.center_mm},
                            {"volume_ml", sp.volume_ml},
                            {"conc_mbq_per_ml", sp.conc_mbq_per_ml}});
}

void from_json(const nlohmann::json& j, PhantomSpec& s) {
  s = PhantomSpec{};
  if (j.contains("semi_axes_mm")) j.at("semi_axes_mm").get_to(s.semi_axes_mm);
  if (j.contains("background_conc_mbq_per_ml"))
    j.at("background_conc_mbq_per_ml").get_to(s.background_conc_mbq_per_ml);
  if (j.contains("mu_body_per_mm")) j.at("mu_body_per_mm").get_to(s.mu_body_per_mm);
  if (j.contains("spheres")) {
    for (auto const& js : j.at("spheres")) {
      SphereInsert sp;
      js.at("name").get_to(sp.name);
      js.at("center_mm").get_to(sp.center_mm);
      js.at("volume_ml").get_to(sp.volume_ml);
      js.at("conc_mbq_per_ml").get_to(sp.conc_mbq_per_ml);
      s.spheres.push_back(sp);
    }
  } else {
    s.spheres = PhantomSpec::standard().spheres;
  }
}

}  // namespace spect

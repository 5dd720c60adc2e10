#include "spect/projector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace spect {

namespace {

// Sample positions this close to a grid line are snapped onto it, so that
// quarter-turn views reduce to exact permutations.
constexpr double kSnap = 1e-9;

double snap(double v) {
  double const r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

constexpr int kBackBlock = 8;

}  // namespace

void SystemModel::validate() const {
  geometry.validate();
  if (psf_sigma0_mm < 0.0 || psf_slope < 0.0)
    throw std::invalid_argument("SystemModel: PSF parameters must be nonnegative");
  if (!(calibration > 0.0)) throw std::invalid_argument("SystemModel: calibration must be positive");
  if (mu_map.nx != geometry.det_nu || mu_map.ny != geometry.det_nu || mu_map.nz != geometry.det_nv)
    throw std::invalid_argument("SystemModel: mu_map grid must be det_nu x det_nu x det_nv");
  for (double v : mu_map.voxel_mm)
    if (std::abs(v - geometry.det_pixel_mm) > 1e-9 * geometry.det_pixel_mm)
      throw std::invalid_argument("SystemModel: voxel size must equal the detector pixel pitch");
  if (mu_map.values.size() != static_cast<std::size_t>(mu_map.nx) * mu_map.ny * mu_map.nz)
    throw std::invalid_argument("SystemModel: mu_map value count does not match dims");
  for (float m : mu_map.values)
    if (!(m >= 0.0f)) throw std::invalid_argument("SystemModel: mu_map must be nonnegative");
}

double psf_sigma(double depth_mm, const SystemModel& model) {
  return model.psf_sigma0_mm + model.psf_slope * depth_mm;
}

std::vector<float> gaussian_kernel(double sigma_px) {
  if (!(sigma_px > 1e-6)) return {1.0f};
  int const half = static_cast<int>(std::ceil(4.0 * sigma_px));
  std::vector<double> w(2 * half + 1);
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    w[k + half] = std::exp(-0.5 * k * k / (sigma_px * sigma_px));
    total += w[k + half];
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(w[i] / total);
  // Enforce exact symmetry after rounding.
  for (int k = 1; k <= half; ++k) out[half - k] = out[half + k];
  return out;
}

void blur_accumulate(std::span<const float> in, std::span<float> out, int nrows, int ncols,
                     std::span<const float> kernel, float scale, std::span<float> scratch) {
  int const half = static_cast<int>(kernel.size() / 2);
  if (half == 0) {
    float const s = scale * kernel[0];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * in[i];
    return;
  }
  // Along columns (u), into scratch.
  for (int r = 0; r < nrows; ++r) {
    float const* src = in.data() + static_cast<std::size_t>(r) * ncols;
    float* dst = scratch.data() + static_cast<std::size_t>(r) * ncols;
    for (int c = 0; c < ncols; ++c) {
      int const k0 = std::max(-half, -c);
      int const k1 = std::min(half, ncols - 1 - c);
      float acc = 0.0f;
      for (int k = k0; k <= k1; ++k) acc += kernel[k + half] * src[c + k];
      dst[c] = acc;
    }
  }
  // Along rows (v), accumulated into out.
  for (int r = 0; r < nrows; ++r) {
    int const k0 = std::max(-half, -r);
    int const k1 = std::min(half, nrows - 1 - r);
    float* dst = out.data() + static_cast<std::size_t>(r) * ncols;
    for (int k = k0; k <= k1; ++k) {
      float const w = scale * kernel[k + half];
      float const* src = scratch.data() + static_cast<std::size_t>(r + k) * ncols;
      for (int c = 0; c < ncols; ++c) dst[c] += w * src[c];
    }
  }
}

Projector::Projector(SystemModel model, bool cache_transmission) : model_(std::move(model)) {
  model_.validate();
  auto const& g = model_.geometry;
  nx_ = model_.mu_map.nx;
  ny_ = model_.mu_map.ny;
  nz_ = model_.mu_map.nz;
  attenuating_ = std::any_of(model_.mu_map.values.begin(), model_.mu_map.values.end(),
                             [](float m) { return m > 0.0f; });

  int const n_views = g.n_views();
  double const cx = 0.5 * (nx_ - 1);
  double const cy = 0.5 * (ny_ - 1);
  double const pitch = g.det_pixel_mm;

  rotation_.resize(n_views);
  kernels_.resize(static_cast<std::size_t>(n_views) * ny_);
  for (int v = 0; v < n_views; ++v) {
    auto const sc = sincos_deg(g.view_angles_deg[v]);
    auto& taps = rotation_[v];
    taps.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        double const xr = i - cx;
        double const yr = j - cy;
        double const fx = snap(cx + xr * sc.cos + yr * sc.sin);
        double const fy = snap(cy - xr * sc.sin + yr * sc.cos);
        int const x0 = static_cast<int>(std::floor(fx));
        int const y0 = static_cast<int>(std::floor(fy));
        double const ax = fx - x0;
        double const ay = fy - y0;
        Tap t{};
        int const xs[4] = {x0, x0 + 1, x0, x0 + 1};
        int const ys[4] = {y0, y0, y0 + 1, y0 + 1};
        double const ws[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
        for (int k = 0; k < 4; ++k) {
          bool const ok = xs[k] >= 0 && xs[k] < nx_ && ys[k] >= 0 && ys[k] < ny_;
          t.index[k] = ok ? ys[k] * nx_ + xs[k] : 0;
          t.weight[k] = ok ? static_cast<float>(ws[k]) : 0.0f;
        }
        taps[static_cast<std::size_t>(j) * nx_ + i] = t;
      }
      // Plane j sits (j - cy) * pitch beyond the axis toward the detector.
      double const depth = std::max(0.0, g.radial_mm[v] - (j - cy) * pitch);
      kernels_[static_cast<std::size_t>(v) * ny_ + j] = gaussian_kernel(psf_sigma(depth, model_) / pitch);
    }
  }

  if (cache_transmission && attenuating_) {
    transmission_.resize(n_views);
#pragma omp parallel for schedule(dynamic)
    for (int v = 0; v < n_views; ++v) {
      transmission_[v].resize(static_cast<std::size_t>(nz_) * ny_ * nx_);
      compute_transmission(v, transmission_[v]);
    }
  }
}

void Projector::check_volume(const ImageVolume& x) const {
  if (x.nx != nx_ || x.ny != ny_ || x.nz != nz_ ||
      x.values.size() != static_cast<std::size_t>(nx_) * ny_ * nz_)
    throw std::invalid_argument("projector: volume dims do not match the system grid");
}

void Projector::compute_transmission(int view, std::span<float> out) const {
  auto const& taps = rotation_[view];
  std::size_t const slice = static_cast<std::size_t>(nx_) * ny_;
  double const step = model_.geometry.det_pixel_mm;
  std::vector<float> rotated(slice);
  for (int z = 0; z < nz_; ++z) {
    float const* mu = model_.mu_map.values.data() + z * slice;
    for (std::size_t p = 0; p < slice; ++p) {
      auto const& t = taps[p];
      rotated[p] = t.weight[0] * mu[t.index[0]] + t.weight[1] * mu[t.index[1]] +
                   t.weight[2] * mu[t.index[2]] + t.weight[3] * mu[t.index[3]];
    }
    float* dst = out.data() + z * slice;
    for (int i = 0; i < nx_; ++i) {
      double acc = 0.0;
      for (int j = ny_ - 1; j >= 0; --j) {
        double const m = rotated[static_cast<std::size_t>(j) * nx_ + i];
        dst[static_cast<std::size_t>(j) * nx_ + i] = static_cast<float>(std::exp(-step * (acc + 0.5 * m)));
        acc += m;
      }
    }
  }
}

std::span<const float> Projector::transmission(int view, std::vector<float>& scratch) const {
  if (!attenuating_) return {};
  if (!transmission_.empty()) return transmission_[view];
  scratch.resize(static_cast<std::size_t>(nz_) * ny_ * nx_);
  compute_transmission(view, scratch);
  return scratch;
}

void Projector::forward_view(int view, std::span<const float> x, std::span<float> out) const {
  std::size_t const slice = static_cast<std::size_t>(nx_) * ny_;
  std::size_t const plane_size = static_cast<std::size_t>(nz_) * nx_;
  auto const& taps = rotation_[view];
  std::vector<float> rotated(slice * nz_);
  for (int z = 0; z < nz_; ++z) {
    float const* src = x.data() + z * slice;
    float* dst = rotated.data() + z * slice;
    for (std::size_t p = 0; p < slice; ++p) {
      auto const& t = taps[p];
      dst[p] = t.weight[0] * src[t.index[0]] + t.weight[1] * src[t.index[1]] +
               t.weight[2] * src[t.index[2]] + t.weight[3] * src[t.index[3]];
    }
  }
  std::vector<float> trans_scratch;
  auto const trans = transmission(view, trans_scratch);

  std::fill(out.begin(), out.end(), 0.0f);
  std::vector<float> plane(plane_size), scratch(plane_size);
  float const scale = static_cast<float>(model_.calibration * model_.geometry.det_pixel_mm);
  for (int j = 0; j < ny_; ++j) {
    bool any = false;
    for (int z = 0; z < nz_; ++z) {
      std::size_t const off = z * slice + static_cast<std::size_t>(j) * nx_;
      float* dst = plane.data() + static_cast<std::size_t>(z) * nx_;
      for (int i = 0; i < nx_; ++i) {
        float val = rotated[off + i];
        if (!trans.empty()) val *= trans[off + i];
        dst[i] = val;
        any = any || val != 0.0f;
      }
    }
    if (!any) continue;
    blur_accumulate(plane, out, nz_, nx_, kernels_[static_cast<std::size_t>(view) * ny_ + j], scale, scratch);
  }
}

void Projector::back_view_add(int view, std::span<const float> p, std::span<float> out) const {
  std::size_t const slice = static_cast<std::size_t>(nx_) * ny_;
  std::size_t const plane_size = static_cast<std::size_t>(nz_) * nx_;
  std::vector<float> trans_scratch;
  auto const trans = transmission(view, trans_scratch);

  std::vector<float> rotated(slice * nz_);
  std::vector<float> blurred(plane_size), scratch(plane_size);
  float const scale = static_cast<float>(model_.calibration * model_.geometry.det_pixel_mm);
  std::vector<float> const* last_kernel = nullptr;
  for (int j = 0; j < ny_; ++j) {
    auto const& kernel = kernels_[static_cast<std::size_t>(view) * ny_ + j];
    if (last_kernel == nullptr || *last_kernel != kernel) {
      std::fill(blurred.begin(), blurred.end(), 0.0f);
      blur_accumulate(p, blurred, nz_, nx_, kernel, scale, scratch);
      last_kernel = &kernel;
    }
    for (int z = 0; z < nz_; ++z) {
      std::size_t const off = z * slice + static_cast<std::size_t>(j) * nx_;
      float const* src = blurred.data() + static_cast<std::size_t>(z) * nx_;
      for (int i = 0; i < nx_; ++i)
        rotated[off + i] = trans.empty() ? src[i] : src[i] * trans[off + i];
    }
  }
  auto const& taps = rotation_[view];
  for (int z = 0; z < nz_; ++z) {
    float const* src = rotated.data() + z * slice;
    float* dst = out.data() + z * slice;
    for (std::size_t q = 0; q < slice; ++q) {
      float const val = src[q];
      if (val == 0.0f) continue;
      auto const& t = taps[q];
      dst[t.index[0]] += t.weight[0] * val;
      dst[t.index[1]] += t.weight[1] * val;
      dst[t.index[2]] += t.weight[2] * val;
      dst[t.index[3]] += t.weight[3] * val;
    }
  }
}

ProjectionStack Projector::forward(const ImageVolume& x, std::span<const int> views) const {
  check_volume(x);
  ProjectionStack out(model_.geometry, {views.begin(), views.end()}, 1, ProjectionKind::Mean);
  int const n = static_cast<int>(views.size());
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n; ++s) forward_view(views[s], x.values, out.view(0, s));
  return out;
}

ImageVolume Projector::back(const ProjectionStack& p, std::span<const int> views) const {
  if (p.geometry.det_nu != model_.geometry.det_nu || p.geometry.det_nv != model_.geometry.det_nv)
    throw std::invalid_argument("projector: projection shape does not match the system geometry");
  std::vector<int> slots(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    slots[k] = p.slot_of(views[k]);
    if (slots[k] < 0) throw std::invalid_argument("projector: view missing from projection stack");
  }
  ImageVolume out(nx_, ny_, nz_, model_.mu_map.voxel_mm);
  std::size_t const vol = out.size();
  int const n = static_cast<int>(views.size());
  std::vector<std::vector<float>> partial(std::min(n, kBackBlock), std::vector<float>(vol));
  for (int b0 = 0; b0 < n; b0 += kBackBlock) {
    int const nb = std::min(kBackBlock, n - b0);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nb; ++k) {
      std::fill(partial[k].begin(), partial[k].end(), 0.0f);
      back_view_add(views[b0 + k], p.view(0, slots[b0 + k]), partial[k]);
    }
    for (int k = 0; k < nb; ++k) {
      float const* src = partial[k].data();
      float* dst = out.values.data();
      for (std::size_t i = 0; i < vol; ++i) dst[i] += src[i];
    }
  }
  return out;
}

ImageVolume Projector::sensitivity(std::span<const int> views) const {
  ProjectionStack ones(model_.geometry, {views.begin(), views.end()}, 1, ProjectionKind::Mean);
  std::fill(ones.data.begin(), ones.data.end(), 1.0f);
  return back(ones, views);
}

ProjectionStack forward_project(const ImageVolume& x, const SystemModel& model,
                                std::span<const int> views) {
  return Projector(model, false).forward(x, views);
}

ImageVolume back_project(const ProjectionStack& p, const SystemModel& model,
                         std::span<const int> views) {
  return Projector(model, false).back(p, views);
}

}  // namespace spect

#pragma once

#include <span>
#include <vector>

#include "spect/geometry.hpp"
#include "spect/projection.hpp"
#include "spect/volume.hpp"

namespace spect {

/// Parameters of the system matrix A. The reconstruction grid is the mu_map
/// grid: nx == ny == det_nu, nz == det_nv, isotropic voxels of det_pixel_mm.
struct SystemModel {
  ScanGeometry geometry;
  ImageVolume mu_map;
  double psf_sigma0_mm = 1.5;
  double psf_slope = 0.03;
  /// Counts per unit activity per mm of ray.
  double calibration = 1.0;

  void validate() const;
};

/// Collimator-detector response width at a distance `depth_mm` from the detector face.
double psf_sigma(double depth_mm, const SystemModel& model);

/// Discrete Gaussian, truncated at 4 sigma and normalized to unit sum.
/// Returns {1} for sigma_px <= 1e-6.
std::vector<float> gaussian_kernel(double sigma_px);

/// Symmetric zero-padded separable 2-D convolution of an nrows x ncols image,
/// accumulated as out += scale * (K * in).
void blur_accumulate(std::span<const float> in, std::span<float> out, int nrows, int ncols,
                     std::span<const float> kernel, float scale, std::span<float> scratch);

/// Rotation-based projector: for each view, rotate the volume into the
/// detector frame with bilinear interpolation, weight each depth plane by the
/// transmission to the detector, blur it with the depth-dependent PSF and sum.
/// Views run in parallel; back-projection reduces per-view partial volumes in
/// view order, so results do not depend on the thread count.
class Projector {
 public:
  explicit Projector(SystemModel model, bool cache_transmission = true);

  const SystemModel& model() const { return model_; }

  /// Photopeak mean counts for the listed views (single window).
  ProjectionStack forward(const ImageVolume& x, std::span<const int> views) const;
  /// Adjoint of forward; reads window 0 of p for each listed view.
  ImageVolume back(const ProjectionStack& p, std::span<const int> views) const;
  /// Sum over the listed views of A^T 1.
  ImageVolume sensitivity(std::span<const int> views) const;

  void forward_view(int view, std::span<const float> x, std::span<float> out) const;
  void back_view_add(int view, std::span<const float> p, std::span<float> out) const;

 private:
  struct Tap {
    int index[4];
    float weight[4];
  };

  void check_volume(const ImageVolume& x) const;
  void compute_transmission(int view, std::span<float> out) const;
  std::span<const float> transmission(int view, std::vector<float>& scratch) const;

  SystemModel model_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  bool attenuating_ = false;
  std::vector<std::vector<Tap>> rotation_;        // per view, ny*nx taps
  std::vector<std::vector<float>> kernels_;       // per view*ny + plane
  std::vector<std::vector<float>> transmission_;  // per view when cached
};

ProjectionStack forward_project(const ImageVolume& x, const SystemModel& model,
                                std::span<const int> views);
ImageVolume back_project(const ProjectionStack& p, const SystemModel& model,
                         std::span<const int> views);

/// Direct serial implementation of the same operator: explicit bilinear
/// sampling, on-the-fly transmission and non-separable blur. Test/bench only.
namespace reference {
ProjectionStack forward_project(const ImageVolume& x, const SystemModel& model,
                                std::span<const int> views);
ImageVolume back_project(const ProjectionStack& p, const SystemModel& model,
                         std::span<const int> views);
}  // namespace reference

}  // namespace spect

#include "spect/volume.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace spect {

ImageVolume::ImageVolume(int nx_, int ny_, int nz_, std::array<double, 3> voxel, float fill)
    : nx(nx_), ny(ny_), nz(nz_), voxel_mm(voxel) {
  if (nx <= 0 || ny <= 0 || nz <= 0) throw std::invalid_argument("ImageVolume: dims must be positive");
  values.assign(static_cast<std::size_t>(nx) * ny * nz, fill);
}

bool ImageVolume::same_grid(const ImageVolume& other) const {
  return nx == other.nx && ny == other.ny && nz == other.nz && voxel_mm == other.voxel_mm;
}

double ImageVolume::sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

void ImageVolume::validate() const {
  if (nx < 8 || ny < 8 || nz < 8) throw std::invalid_argument("ImageVolume: dims must be >= 8");
  if (values.size() != static_cast<std::size_t>(nx) * ny * nz)
    throw std::invalid_argument("ImageVolume: value count does not match dims");
  if (std::any_of(values.begin(), values.end(), [](float v) { return !(v >= 0.0f); }))
    throw std::invalid_argument("ImageVolume: values must be nonnegative");
}

std::string_view VoiMask::role_name() const {
  return role == Role::Sphere ? "sphere" : "background";
}

std::size_t VoiMask::count() const {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1));
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

}  // namespace spect

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spect {

/// Scalar field on a regular grid, stored x-fastest: index = (z*ny + y)*nx + x.
/// Voxel centers sit at (i - (n-1)/2) * voxel_mm along each axis.
struct ImageVolume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  std::array<double, 3> voxel_mm{1.0, 1.0, 1.0};
  std::vector<float> values;

  ImageVolume() = default;
  ImageVolume(int nx_, int ny_, int nz_, std::array<double, 3> voxel, float fill = 0.0f);

  std::size_t size() const { return values.size(); }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * ny + y) * nx + x;
  }
  float& at(int x, int y, int z) { return values[index(x, y, z)]; }
  float at(int x, int y, int z) const { return values[index(x, y, z)]; }

  double voxel_volume_mm3() const { return voxel_mm[0] * voxel_mm[1] * voxel_mm[2]; }
  bool same_grid(const ImageVolume& other) const;
  double sum() const;

  /// Throws std::invalid_argument unless dims >= 8 and values >= 0.
  void validate() const;
};

/// Boolean region on an ImageVolume grid.
struct VoiMask {
  enum class Role { Sphere, Background };

  std::string_view role_name() const;

  std::string name;
  Role role = Role::Sphere;
  int nx = 0;
  int ny = 0;
  int nz = 0;
  std::vector<unsigned char> inside;

  std::size_t count() const;
  bool matches(const ImageVolume& volume) const {
    return nx == volume.nx && ny == volume.ny && nz == volume.nz;
  }
};

double dot(std::span<const float> a, std::span<const float> b);

}  // namespace spect

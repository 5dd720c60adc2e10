#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "spect/volume.hpp"

namespace spect {

struct SphereInsert {
  std::string name;
  std::array<double, 3> center_mm{0.0, 0.0, 0.0};
  double volume_ml = 0.0;
  double conc_mbq_per_ml = 0.0;
};

/// Ellipsoidal body with hot spheres in a warm background.
struct PhantomSpec {
  std::array<double, 3> semi_axes_mm{140.0, 100.0, 90.0};
  double background_conc_mbq_per_ml = 0.035;
  std::vector<SphereInsert> spheres;
  /// Water at 208 keV.
  double mu_body_per_mm = 0.0136;

  /// Six spheres {2,4,8,16,30,114} mL at 0.22 MBq/mL on a 65 mm ring in the
  /// central transverse plane, 0.035 MBq/mL background.
  static PhantomSpec standard();

  void validate() const;
};

void to_json(nlohmann::json& j, const PhantomSpec& s);
void from_json(const nlohmann::json& j, PhantomSpec& s);

/// Radius in mm of a sphere of the given volume in mL (1 mL = 1000 mm^3).
double sphere_radius_from_volume(double volume_ml);

struct Phantom {
  /// MBq per voxel.
  ImageVolume activity;
  /// Linear attenuation in 1/mm.
  ImageVolume mu_map;
  /// One mask per sphere (in spec order) followed by the background mask.
  std::vector<VoiMask> masks;
};

/// Voxelizes the phantom with subsamples^3 points per voxel. Activity and mu
/// both carry fractional occupancy at the body boundary.
Phantom build_phantom(const PhantomSpec& spec, std::array<int, 3> dims,
                      std::array<double, 3> voxel_mm, int subsamples = 3);

}  // namespace spect

#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spect/volume.hpp"

namespace spect {

/// RMS of (estimate - reference) over the region divided by the RMS of the
/// reference over the same region. A null region means every element.
double nrmsd(std::span<const float> estimate, std::span<const float> reference,
             const VoiMask* region = nullptr);

double mean_in(const ImageVolume& image, const VoiMask& region);

/// Population standard deviation (divisor n) over the mask.
double bkg_std(const ImageVolume& image, const VoiMask& bkg);

double activity_recovery(const ImageVolume& recon, const ImageVolume& truth, const VoiMask& voi);
double arnr(double ar, double std_bkg);

double cnr(const ImageVolume& recon, const VoiMask& voi, const VoiMask& bkg);
/// Percent.
double rcnr(double cnr_sparse, double cnr_full);

struct ProfileSample {
  int u = 0;
  int v = 0;
  float value = 0.0f;
};

/// Pixel values along the Bresenham segment from start to end, inclusive.
/// Points are (u, v) with u the column index of an nv x nu view.
std::vector<ProfileSample> line_profile(std::span<const float> view, int nu, int nv,
                                        std::array<int, 2> start, std::array<int, 2> end);

/// Local maxima whose topographic prominence is at least
/// min_prominence * (max - min) of the profile.
int count_peaks(std::span<const float> values, double min_prominence = 0.1);

struct MetricsRow {
  std::string regime;
  int df = 1;
  std::string voi;
  double nrmsd = std::numeric_limits<double>::quiet_NaN();
  double ar = std::numeric_limits<double>::quiet_NaN();
  double arnr = std::numeric_limits<double>::quiet_NaN();
  double cnr = std::numeric_limits<double>::quiet_NaN();
  double rcnr = std::numeric_limits<double>::quiet_NaN();
  double std_bkg = std::numeric_limits<double>::quiet_NaN();
};

/// Columns: regime, df, voi, nrmsd, ar, arnr, cnr, rcnr, std_bkg. NaN is written empty.
std::string metrics_csv(std::span<const MetricsRow> rows);
nlohmann::json metrics_json(std::span<const MetricsRow> rows);

}  // namespace spect

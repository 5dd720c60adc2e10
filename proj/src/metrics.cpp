#include "spect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace spect {

namespace {

void check_mask(const ImageVolume& image, const VoiMask& mask) {
  if (!mask.matches(image) || mask.inside.size() != image.size())
    throw std::invalid_argument("mask '" + mask.name + "' does not match the image grid");
}

}  // namespace

double nrmsd(std::span<const float> estimate, std::span<const float> reference, const VoiMask* region) {
  if (estimate.size() != reference.size()) throw std::invalid_argument("nrmsd: length mismatch");
  if (region && region->inside.size() != reference.size())
    throw std::invalid_argument("nrmsd: region does not match data");
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (region && !region->inside[i]) continue;
    double const d = static_cast<double>(estimate[i]) - reference[i];
    diff += d * d;
    ref += static_cast<double>(reference[i]) * reference[i];
  }
  if (!(ref > 0.0)) throw std::invalid_argument("nrmsd: reference has zero norm in the region");
  return std::sqrt(diff / ref);
}

double mean_in(const ImageVolume& image, const VoiMask& region) {
  check_mask(image, region);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < image.size(); ++i)
    if (region.inside[i]) {
      sum += image.values[i];
      ++n;
    }
  if (n == 0) throw std::invalid_argument("mask '" + region.name + "' is empty");
  return sum / static_cast<double>(n);
}

double bkg_std(const ImageVolume& image, const VoiMask& bkg) {
  check_mask(image, bkg);
  if (bkg.count() < 2) throw std::invalid_argument("bkg_std: background needs at least 2 voxels");
  double const m = mean_in(image, bkg);
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < image.size(); ++i)
    if (bkg.inside[i]) {
      double const d = image.values[i] - m;
      ss += d * d;
      ++n;
    }
  return std::sqrt(ss / static_cast<double>(n));
}

double activity_recovery(const ImageVolume& recon, const ImageVolume& truth, const VoiMask& voi) {
  double const t = mean_in(truth, voi);
  if (!(t > 0.0)) throw std::invalid_argument("activity_recovery: true mean in VOI must be positive");
  return mean_in(recon, voi) / t;
}

double arnr(double ar, double std_bkg) {
  if (!(std_bkg > 0.0)) throw std::invalid_argument("arnr: background std must be positive");
  return ar / std_bkg;
}

double cnr(const ImageVolume& recon, const VoiMask& voi, const VoiMask& bkg) {
  double const sd = bkg_std(recon, bkg);
  if (!(sd > 0.0)) throw std::invalid_argument("cnr: background std is zero");
  return (mean_in(recon, voi) - mean_in(recon, bkg)) / sd;
}

double rcnr(double cnr_sparse, double cnr_full) {
  if (cnr_full == 0.0) throw std::invalid_argument("rcnr: full-reconstruction CNR is zero");
  return 100.0 * cnr_sparse / cnr_full;
}

std::vector<ProfileSample> line_profile(std::span<const float> view, int nu, int nv,
                                        std::array<int, 2> start, std::array<int, 2> end) {
  if (view.size() != static_cast<std::size_t>(nu) * nv)
    throw std::invalid_argument("line_profile: view size does not match nu x nv");
  for (auto const& p : {start, end})
    if (p[0] < 0 || p[1] < 0 || p[0] >= nu || p[1] >= nv)
      throw std::invalid_argument("line_profile: endpoint outside the view");
  std::vector<ProfileSample> out;
  int x = start[0], y = start[1];
  int const dx = std::abs(end[0] - x), dy = -std::abs(end[1] - y);
  int const sx = x < end[0] ? 1 : -1, sy = y < end[1] ? 1 : -1;
  int err = dx + dy;
  while (true) {
    out.push_back({x, y, view[static_cast<std::size_t>(y) * nu + x]});
    if (x == end[0] && y == end[1]) break;
    int const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
  return out;
}

int count_peaks(std::span<const float> values, double min_prominence) {
  int const n = static_cast<int>(values.size());
  if (n < 3) return 0;
  auto const [lo, hi] = std::minmax_element(values.begin(), values.end());
  double const range = static_cast<double>(*hi) - *lo;
  if (!(range > 0.0)) return 0;
  int peaks = 0;
  for (int i = 1; i < n - 1; ++i) {
    if (!(values[i] > values[i - 1])) continue;
    // Plateau: the peak spans i..j with equal values.
    int j = i;
    while (j + 1 < n && values[j + 1] == values[i]) ++j;
    if (j + 1 >= n || !(values[j + 1] < values[i])) {
      i = j;
      continue;
    }
    double const h = values[i];
    double left_min = h, right_min = h;
    for (int k = i - 1; k >= 0 && values[k] <= h; --k) left_min = std::min<double>(left_min, values[k]);
    for (int k = j + 1; k < n && values[k] <= h; ++k) right_min = std::min<double>(right_min, values[k]);
    double const prominence = h - std::max(left_min, right_min);
    if (prominence >= min_prominence * range) ++peaks;
    i = j;
  }
  return peaks;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::ostringstream os;
  os << "regime,df,voi,nrmsd,ar,arnr,cnr,rcnr,std_bkg\n";
  auto num = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (auto const& r : rows)
    os << r.regime << ',' << r.df << ',' << r.voi << ',' << num(r.nrmsd) << ',' << num(r.ar) << ','
       << num(r.arnr) << ',' << num(r.cnr) << ',' << num(r.rcnr) << ',' << num(r.std_bkg) << '\n';
  return os.str();
}

nlohmann::json metrics_json(std::span<const MetricsRow> rows) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json out = nlohmann::json::array();
  for (auto const& r : rows)
    out.push_back({{"regime", r.regime}, {"df", r.df}, {"voi", r.voi}, {"nrmsd", num(r.nrmsd)},
                   {"ar", num(r.ar)}, {"arnr", num(r.arnr)}, {"cnr", num(r.cnr)},
                   {"rcnr", num(r.rcnr)}, {"std_bkg", num(r.std_bkg)}});
  return out;
}

}  // namespace spect

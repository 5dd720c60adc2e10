#include "spect/simulate.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace spect {

void ScatterParams::validate() const {
  if (scatter_fraction < 0.0 || scatter_fraction >= 1.0)
    throw std::invalid_argument("ScatterParams: scatter_fraction must lie in [0, 1)");
  if (!(w_peak > 0.0) || !(w_low > 0.0) || !(w_up > 0.0))
    throw std::invalid_argument("ScatterParams: window widths must be positive");
  if (blur_sigma_mm < 0.0 || kappa_low < 0.0 || kappa_up < 0.0)
    throw std::invalid_argument("ScatterParams: blur and leakage factors must be nonnegative");
}

void to_json(nlohmann::json& j, const ScatterParams& p) {
  j = nlohmann::json{{"scatter_fraction", p.scatter_fraction}, {"blur_sigma_mm", p.blur_sigma_mm},
                     {"w_peak", p.w_peak}, {"w_low", p.w_low}, {"w_up", p.w_up},
                     {"kappa_low", p.kappa_low}, {"kappa_up", p.kappa_up}};
}

void from_json(const nlohmann::json& j, ScatterParams& p) {
  p = ScatterParams{};
  p.scatter_fraction = j.value("scatter_fraction", p.scatter_fraction);
  p.blur_sigma_mm = j.value("blur_sigma_mm", p.blur_sigma_mm);
  p.w_peak = j.value("w_peak", p.w_peak);
  p.w_low = j.value("w_low", p.w_low);
  p.w_up = j.value("w_up", p.w_up);
  p.kappa_low = j.value("kappa_low", p.kappa_low);
  p.kappa_up = j.value("kappa_up", p.kappa_up);
}

ScaledStack scale_to_counts(const ProjectionStack& mean, double target_total) {
  double const total = mean.window_sum(0);
  if (!(total > 0.0)) throw std::invalid_argument("scale_to_counts: photopeak window sums to zero");
  if (!(target_total > 0.0)) throw std::invalid_argument("scale_to_counts: target must be positive");
  ScaledStack out{mean, target_total / total};
  if (out.factor != 1.0)
    for (float& x : out.stack.data) x = static_cast<float>(x * out.factor);
  return out;
}

ScatterWindows simulate_scatter(const ProjectionStack& primary, const ScatterParams& params) {
  params.validate();
  auto const& g = primary.geometry;
  ScatterWindows out{ProjectionStack(g, primary.views, 1, ProjectionKind::Mean),
                     ProjectionStack(g, primary.views, 1, ProjectionKind::Mean),
                     ProjectionStack(g, primary.views, 1, ProjectionKind::Mean)};
  if (params.scatter_fraction == 0.0) return out;

  auto const kernel = gaussian_kernel(params.blur_sigma_mm / g.det_pixel_mm);
  std::vector<float> scratch(g.pixels_per_view());
  float const fs = static_cast<float>(params.scatter_fraction);
  float const low = static_cast<float>(params.kappa_low * (params.w_low / params.w_peak));
  float const up = static_cast<float>(params.kappa_up * (params.w_up / params.w_peak));
  for (int s = 0; s < primary.n_slots(); ++s) {
    auto peak = out.peak.view(0, s);
    blur_accumulate(primary.view(0, s), peak, g.det_nv, g.det_nu, kernel, fs, scratch);
    auto lo = out.lower.view(0, s);
    auto hi = out.upper.view(0, s);
    for (std::size_t k = 0; k < peak.size(); ++k) {
      lo[k] = low * peak[k];
      hi[k] = up * peak[k];
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

ProjectionStack poisson_sample(const ProjectionStack& mean, std::uint64_t seed) {
  for (float m : mean.data)
    if (!(m >= 0.0f)) throw std::invalid_argument("poisson_sample: mean must be nonnegative and finite");
  ProjectionStack out = mean;
  out.kind = ProjectionKind::Sampled;
  int const n_jobs = mean.n_windows * mean.n_slots();
#pragma omp parallel for schedule(static)
  for (int job = 0; job < n_jobs; ++job) {
    int const w = job / mean.n_slots();
    int const s = job % mean.n_slots();
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(mean.views[s])));
    auto src = mean.view(w, s);
    auto dst = out.view(w, s);
    for (std::size_t k = 0; k < src.size(); ++k) {
      if (src[k] == 0.0f) {
        dst[k] = 0.0f;
        continue;
      }
      std::poisson_distribution<long long> dist(static_cast<double>(src[k]));
      dst[k] = static_cast<float>(dist(rng));
    }
  }
  return out;
}

Acquisition acquire(const ImageVolume& activity, const SystemModel& model,
                    const ScatterParams& params, double target_counts, const ViewSplit& split,
                    std::uint64_t seed) {
  auto const& g = model.geometry;
  std::vector<int> all(g.n_views());
  std::iota(all.begin(), all.end(), 0);

  SystemModel unit = model;
  unit.calibration = 1.0;
  ProjectionStack const primary = Projector(unit).forward(activity, all);
  ScatterWindows const scat = simulate_scatter(primary, params);

  ProjectionStack mean(g, all, 3, ProjectionKind::Mean);
  auto peak = mean.window(0);
  auto p = primary.window(0);
  auto s = scat.peak.window(0);
  for (std::size_t k = 0; k < peak.size(); ++k) peak[k] = p[k] + s[k];
  std::copy(scat.lower.data.begin(), scat.lower.data.end(), mean.window(1).begin());
  std::copy(scat.upper.data.begin(), scat.upper.data.end(), mean.window(2).begin());

  ScaledStack scaled = scale_to_counts(mean, target_counts);
  Acquisition acq;
  acq.mean = std::move(scaled.stack);
  acq.scatter = scat.peak;
  for (float& x : acq.scatter.data) x = static_cast<float>(x * scaled.factor);
  acq.model = model;
  acq.model.calibration = scaled.factor;
  acq.full_scan = poisson_sample(acq.mean, seed);
  acq.measured = acq.full_scan.select_views(split.measured);
  return acq;
}

}  // namespace spect

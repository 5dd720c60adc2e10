#include "spect/recon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spect/error.hpp"

namespace spect {

void ReconConfig::validate() const {
  if (n_subsets < 1) throw std::invalid_argument("ReconConfig: n_subsets must be >= 1");
  if (n_iterations < 0) throw std::invalid_argument("ReconConfig: n_iterations must be >= 0");
  if (!(init_value > 0.0f)) throw std::invalid_argument("ReconConfig: init_value must be positive");
  if (eps_x < 0.0 || eps_d < 0.0) throw std::invalid_argument("ReconConfig: floors must be nonnegative");
}

void to_json(nlohmann::json& j, const ReconConfig& c) {
  j = nlohmann::json{{"n_subsets", c.n_subsets}, {"n_iterations", c.n_iterations},
                     {"init_value", c.init_value}, {"eps_x", c.eps_x}, {"eps_d", c.eps_d}};
}

void from_json(const nlohmann::json& j, ReconConfig& c) {
  c = ReconConfig{};
  c.n_subsets = j.value("n_subsets", c.n_subsets);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  c.init_value = j.value("init_value", c.init_value);
  c.eps_x = j.value("eps_x", c.eps_x);
  c.eps_d = j.value("eps_d", c.eps_d);
}

ProjectionStack tew_scatter_estimate(const ProjectionStack& lower, const ProjectionStack& upper,
                                     double w_low, double w_up, double w_peak) {
  if (!(w_low > 0.0) || !(w_up > 0.0) || !(w_peak > 0.0))
    throw std::invalid_argument("tew_scatter_estimate: window widths must be positive");
  if (lower.views != upper.views || lower.pixels_per_view() != upper.pixels_per_view())
    throw std::invalid_argument("tew_scatter_estimate: lower/upper windows do not match");
  ProjectionStack out(lower.geometry, lower.views, 1, ProjectionKind::Mean);
  float const cl = static_cast<float>(w_peak / (2.0 * w_low));
  float const cu = static_cast<float>(w_peak / (2.0 * w_up));
  auto lo = lower.window(0);
  auto hi = upper.window(0);
  auto dst = out.window(0);
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = std::max(0.0f, lo[k] * cl + hi[k] * cu);
  return out;
}

ProjectionStack tew_scatter_estimate(const ProjectionStack& scan, const ScatterParams& windows) {
  if (scan.n_windows < 3) throw std::invalid_argument("tew_scatter_estimate: scan needs three windows");
  int const lo[] = {1};
  int const hi[] = {2};
  return tew_scatter_estimate(scan.select_windows(lo), scan.select_windows(hi), windows.w_low,
                              windows.w_up, windows.w_peak);
}

double poisson_loglik(std::span<const float> y, std::span<const float> yhat, double eps_d) {
  if (y.size() != yhat.size()) throw std::invalid_argument("poisson_loglik: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double const m = yhat[i];
    double const c = y[i];
    if (c == 0.0 && m <= eps_d) continue;
    if (c > 0.0 && !(m > 0.0)) throw NumericFailure("poisson_loglik: zero mean with positive counts");
    sum += (c > 0.0 ? c * std::log(m) : 0.0) - m;
  }
  return sum;
}

std::vector<std::vector<int>> make_subsets(const ScanGeometry& geometry, std::span<const int> views,
                                           int n_subsets) {
  if (n_subsets < 1) throw std::invalid_argument("make_subsets: n_subsets must be >= 1");
  if (static_cast<int>(views.size()) < n_subsets)
    throw std::invalid_argument("make_subsets: " + std::to_string(views.size()) + " views cannot fill " +
                                std::to_string(n_subsets) + " subsets");
  std::vector<int> sorted(views.begin(), views.end());
  std::sort(sorted.begin(), sorted.end(),
            [&](int a, int b) { return geometry.view_angles_deg[a] < geometry.view_angles_deg[b]; });
  std::vector<std::vector<int>> subsets(n_subsets);
  for (std::size_t k = 0; k < sorted.size(); ++k) subsets[k % n_subsets].push_back(sorted[k]);
  return subsets;
}

ReconResult osem(const ProjectionStack& y, const ProjectionStack& scatter, const Projector& projector,
                 std::span<const int> views, const ReconConfig& config,
                 const IterationCallback& on_iteration) {
  auto const& grid = projector.model().mu_map;
  ImageVolume init(grid.nx, grid.ny, grid.nz, grid.voxel_mm, config.init_value);
  return osem(y, scatter, projector, views, config, std::move(init), on_iteration);
}

ReconResult osem(const ProjectionStack& y, const ProjectionStack& scatter, const Projector& projector,
                 std::span<const int> views, const ReconConfig& config, ImageVolume init,
                 const IterationCallback& on_iteration) {
  config.validate();
  if (views.empty()) throw std::invalid_argument("osem: no views");
  for (int v : views)
    if (y.slot_of(v) < 0 || scatter.slot_of(v) < 0)
      throw std::invalid_argument("osem: view " + std::to_string(v) + " missing from data or scatter");
  for (int v : views) {
    for (float c : y.view(0, y.slot_of(v)))
      if (!(c >= 0.0f)) throw std::invalid_argument("osem: data must be nonnegative");
    for (float r : scatter.view(0, scatter.slot_of(v)))
      if (!(r >= 0.0f)) throw std::invalid_argument("osem: scatter must be nonnegative");
  }
  auto const subsets = make_subsets(y.geometry, views, config.n_subsets);

  ReconResult result;
  result.image = std::move(init);
  ImageVolume& x = result.image;
  std::size_t const n_vox = x.size();

  std::vector<ImageVolume> sens;
  sens.reserve(subsets.size());
  for (auto const& s : subsets) sens.push_back(projector.sensitivity(s));
  result.support.assign(n_vox, 0);
  for (auto const& s : sens)
    for (std::size_t j = 0; j < n_vox; ++j)
      if (s.values[j] > 0.0f) result.support[j] = 1;

  float const eps_d = static_cast<float>(config.eps_d);
  float const eps_x = static_cast<float>(config.eps_x);
  auto loglik_now = [&] {
    ProjectionStack const yhat = projector.forward(x, views);
    double total = 0.0;
    for (std::size_t k = 0; k < views.size(); ++k) {
      auto const m = yhat.view(0, static_cast<int>(k));
      auto const r = scatter.view(0, scatter.slot_of(views[k]));
      std::vector<float> mean(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) mean[i] = m[i] + r[i];
      total += poisson_loglik(y.view(0, y.slot_of(views[k])), mean, config.eps_d);
    }
    return total;
  };
  if (config.track_loglik) result.loglik.push_back(loglik_now());

  for (int it = 0; it < config.n_iterations; ++it) {
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      auto const& sub = subsets[s];
      ProjectionStack ratio = projector.forward(x, sub);
      for (std::size_t k = 0; k < sub.size(); ++k) {
        auto est = ratio.view(0, static_cast<int>(k));
        auto const data = y.view(0, y.slot_of(sub[k]));
        auto const r = scatter.view(0, scatter.slot_of(sub[k]));
        for (std::size_t i = 0; i < est.size(); ++i) est[i] = data[i] / (est[i] + r[i] + eps_d);
      }
      ImageVolume const back = projector.back(ratio, sub);
      auto const& sv = sens[s].values;
      bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
      for (std::size_t j = 0; j < n_vox; ++j) {
        if (!(sv[j] > 0.0f)) continue;
        float const updated = x.values[j] / sv[j] * back.values[j];
        finite = finite && std::isfinite(updated);
        x.values[j] = std::max(updated, eps_x);
      }
      if (!finite)
        throw NumericFailure("osem: non-finite update in iteration " + std::to_string(it + 1));
    }
    if (config.track_loglik) result.loglik.push_back(loglik_now());
    if (on_iteration) on_iteration(it + 1, x);
  }
  return result;
}

}  // namespace spect

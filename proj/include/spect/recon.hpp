#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "spect/projection.hpp"
#include "spect/projector.hpp"
#include "spect/simulate.hpp"
#include "spect/volume.hpp"

namespace spect {

struct ReconConfig {
  int n_subsets = 6;
  int n_iterations = 16;
  float init_value = 1.0f;
  double eps_x = 1e-12;
  double eps_d = 1e-12;
  /// Record the full-data Poisson log-likelihood after every iteration.
  bool track_loglik = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const ReconConfig& c);
void from_json(const nlohmann::json& j, ReconConfig& c);

/// Triple-energy-window scatter mean inside the photopeak window:
/// max(0, (C_low/w_low + C_up/w_up) * w_peak/2), evaluated as
/// C_low * (w_peak/(2 w_low)) + C_up * (w_peak/(2 w_up)). Reads window 0 of
/// each stack.
ProjectionStack tew_scatter_estimate(const ProjectionStack& lower, const ProjectionStack& upper,
                                     double w_low, double w_up, double w_peak);

/// TEW estimate from windows 1 and 2 of a three-window scan.
ProjectionStack tew_scatter_estimate(const ProjectionStack& scan, const ScatterParams& windows);

/// sum_i y_i log(yhat_i) - yhat_i; pixels with y == 0 and yhat <= eps_d are skipped.
double poisson_loglik(std::span<const float> y, std::span<const float> yhat, double eps_d = 1e-12);

/// Angle-sorted views dealt round-robin into n_subsets subsets.
std::vector<std::vector<int>> make_subsets(const ScanGeometry& geometry, std::span<const int> views,
                                           int n_subsets);

struct ReconResult {
  ImageVolume image;
  /// 1 where the summed sensitivity is positive.
  std::vector<unsigned char> support;
  std::vector<double> loglik;
};

using IterationCallback = std::function<void(int iteration, const ImageVolume& x)>;

/// OSEM for y ~ Poisson(Ax + r). Reads window 0 of y and scatter for the
/// listed views.
ReconResult osem(const ProjectionStack& y, const ProjectionStack& scatter, const Projector& projector,
                 std::span<const int> views, const ReconConfig& config,
                 const IterationCallback& on_iteration = {});

/// Same, starting from a given image instead of the uniform init.
ReconResult osem(const ProjectionStack& y, const ProjectionStack& scatter, const Projector& projector,
                 std::span<const int> views, const ReconConfig& config, ImageVolume init,
                 const IterationCallback& on_iteration = {});

}  // namespace spect

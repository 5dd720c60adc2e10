#pragma once

#include <cstdint>

#include <json.hpp>

#include "spect/geometry.hpp"
#include "spect/projection.hpp"
#include "spect/projector.hpp"
#include "spect/volume.hpp"

namespace spect {

/// Energy windows and the blurred-primary scatter model. Widths in keV.
struct ScatterParams {
  double scatter_fraction = 0.3;
  double blur_sigma_mm = 20.0;
  double w_peak = 41.6;
  double w_low = 20.8;
  double w_up = 20.8;
  double kappa_low = 1.0;
  double kappa_up = 1.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const ScatterParams& p);
void from_json(const nlohmann::json& j, ScatterParams& p);

struct ScaledStack {
  ProjectionStack stack;
  double factor = 1.0;
};

/// Scales every window so that window 0 sums to target_total.
ScaledStack scale_to_counts(const ProjectionStack& mean, double target_total);

struct ScatterWindows {
  ProjectionStack peak;   // scatter mean inside the photopeak window
  ProjectionStack lower;
  ProjectionStack upper;
};

/// s = f_s * blur(primary); lower = kappa_low * s * w_low / w_peak and
/// likewise for upper, so the TEW estimate returns s when both kappas are 1.
ScatterWindows simulate_scatter(const ProjectionStack& primary, const ScatterParams& params);

/// Independent Poisson draws per pixel; stream per (seed, window, view).
ProjectionStack poisson_sample(const ProjectionStack& mean, std::uint64_t seed);

struct Acquisition {
  /// Three-window mean: peak = primary + s, lower, upper.
  ProjectionStack mean;
  /// Photopeak scatter mean s (single window).
  ProjectionStack scatter;
  ProjectionStack full_scan;
  ProjectionStack measured;
  /// Model with calibration rescaled to the simulated count level.
  SystemModel model;
};

/// Simulates a noisy three-window scan over all views, scaled so the
/// photopeak mean totals target_counts, and restricts it to split.measured.
Acquisition acquire(const ImageVolume& activity, const SystemModel& model,
                    const ScatterParams& params, double target_counts, const ViewSplit& split,
                    std::uint64_t seed);

/// Deterministic 64-bit stream seed for (seed, a, b).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace spect

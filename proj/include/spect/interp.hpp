#pragma once

#include <span>
#include <string>
#include <vector>

#include "spect/geometry.hpp"
#include "spect/projection.hpp"

namespace spect {

/// Pixelwise linear interpolation in view angle between the bracketing
/// measured views, wrapping around 360 degrees. Every window is interpolated.
ProjectionStack linear_interpolate_views(const ProjectionStack& measured, const ViewSplit& split);

enum class Regime { Full, Partial, LinInt, Field };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct RegimeData {
  ProjectionStack stack;
  std::vector<int> views;
};

/// Views used to reconstruct under `regime`:
///   full    - the full scan;
///   partial - measured views only;
///   linint/nerf - measured views plus `synthesized` at the skipped indices,
///                 ordered by angle.
RegimeData assemble_regime(const ProjectionStack& full, const ProjectionStack& measured,
                           const ProjectionStack* synthesized, Regime regime);

}  // namespace spect

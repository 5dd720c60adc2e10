#include "spect/interp.hpp"

#include <algorithm>
#include <stdexcept>

namespace spect {

ProjectionStack linear_interpolate_views(const ProjectionStack& measured, const ViewSplit& split) {
  auto const& g = measured.geometry;
  std::vector<int> known = measured.views;
  std::sort(known.begin(), known.end());
  if (known.size() < 2) throw std::invalid_argument("linear_interpolate_views: need >= 2 measured views");

  ProjectionStack out(g, split.skipped, measured.n_windows, ProjectionKind::Synthesized);
  int const n_known = static_cast<int>(known.size());
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < out.n_slots(); ++s) {
    int const view = split.skipped[s];
    double const theta = g.view_angles_deg[view];
    // First measured view with a larger angle; wrap at either end.
    auto it = std::upper_bound(known.begin(), known.end(), view,
                               [&](int v, int k) { return g.view_angles_deg[v] < g.view_angles_deg[k]; });
    int const hi_pos = static_cast<int>(it - known.begin()) % n_known;
    int const lo_pos = (hi_pos + n_known - 1) % n_known;
    int const lo = known[lo_pos];
    int const hi = known[hi_pos];
    double lo_angle = g.view_angles_deg[lo];
    double hi_angle = g.view_angles_deg[hi];
    double t = theta;
    if (hi_angle <= lo_angle) hi_angle += 360.0;
    if (t < lo_angle) t += 360.0;
    float const w = static_cast<float>((t - lo_angle) / (hi_angle - lo_angle));
    int const lo_slot = measured.slot_of(lo);
    int const hi_slot = measured.slot_of(hi);
    for (int win = 0; win < measured.n_windows; ++win) {
      auto a = measured.view(win, lo_slot);
      auto b = measured.view(win, hi_slot);
      auto dst = out.view(win, s);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = (1.0f - w) * a[k] + w * b[k];
    }
  }
  return out;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Full: return "full";
    case Regime::Partial: return "partial";
    case Regime::LinInt: return "linint";
    case Regime::Field: return "nerf";
  }
  return "full";
}

Regime regime_from_string(const std::string& s) {
  if (s == "full") return Regime::Full;
  if (s == "partial") return Regime::Partial;
  if (s == "linint") return Regime::LinInt;
  if (s == "nerf") return Regime::Field;
  throw std::invalid_argument("unknown regime '" + s + "'");
}

RegimeData assemble_regime(const ProjectionStack& full, const ProjectionStack& measured,
                           const ProjectionStack* synthesized, Regime regime) {
  auto const& g = full.geometry;
  auto by_angle = [&](std::vector<int> v) {
    std::sort(v.begin(), v.end(), [&](int a, int b) { return g.view_angles_deg[a] < g.view_angles_deg[b]; });
    return v;
  };
  switch (regime) {
    case Regime::Full: {
      if (synthesized) throw std::invalid_argument("assemble_regime: full regime takes no synthesized views");
      return {full, full.views};
    }
    case Regime::Partial: {
      if (synthesized) throw std::invalid_argument("assemble_regime: partial regime takes no synthesized views");
      auto views = by_angle(measured.views);
      return {measured.select_views(views), views};
    }
    case Regime::LinInt:
    case Regime::Field: {
      if (!synthesized) throw std::invalid_argument("assemble_regime: regime needs synthesized views");
      if (synthesized->n_windows != measured.n_windows || synthesized->geometry.det_nu != g.det_nu ||
          synthesized->geometry.det_nv != g.det_nv)
        throw std::invalid_argument("assemble_regime: synthesized stack shape mismatch");
      for (int v : synthesized->views)
        if (measured.slot_of(v) >= 0)
          throw std::invalid_argument("assemble_regime: synthesized view overlaps a measured view");
      std::vector<int> views = measured.views;
      views.insert(views.end(), synthesized->views.begin(), synthesized->views.end());
      views = by_angle(views);
      if (static_cast<int>(views.size()) != g.n_views() ||
          std::adjacent_find(views.begin(), views.end()) != views.end())
        throw std::invalid_argument("assemble_regime: measured and synthesized views must cover the scan once");
      ProjectionStack out(g, views, measured.n_windows, ProjectionKind::Synthesized);
      for (std::size_t i = 0; i < views.size(); ++i) {
        bool const is_measured = measured.slot_of(views[i]) >= 0;
        auto const& src = is_measured ? measured : *synthesized;
        int const slot = src.slot_of(views[i]);
        for (int w = 0; w < out.n_windows; ++w) {
          auto from = src.view(w, slot);
          std::copy(from.begin(), from.end(), out.view(w, static_cast<int>(i)).begin());
        }
      }
      return {std::move(out), views};
    }
  }
  throw std::invalid_argument("assemble_regime: unknown regime");
}

}  // namespace spect

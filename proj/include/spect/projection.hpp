#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spect/geometry.hpp"

namespace spect {

enum class ProjectionKind { Mean, Sampled, Synthesized };

std::string to_string(ProjectionKind kind);
ProjectionKind projection_kind_from_string(const std::string& s);

/// Energy-window labels by index; index 0 is the photopeak.
inline constexpr const char* kWindowLabels[] = {"peak", "lower", "upper"};

/// Per-window, per-view detector images bound to a geometry. `views` holds
/// the geometry view index of every stored slot. Storage is
/// [window][slot][v][u], u fastest.
struct ProjectionStack {
  ScanGeometry geometry;
  std::vector<int> views;
  int n_windows = 1;
  ProjectionKind kind = ProjectionKind::Mean;
  std::vector<float> data;

  ProjectionStack() = default;
  ProjectionStack(ScanGeometry geom, std::vector<int> view_indices, int windows,
                  ProjectionKind k);

  int n_slots() const { return static_cast<int>(views.size()); }
  std::size_t pixels_per_view() const { return geometry.pixels_per_view(); }
  std::size_t window_size() const { return pixels_per_view() * views.size(); }

  std::span<float> view(int window, int slot);
  std::span<const float> view(int window, int slot) const;
  std::span<float> window(int w);
  std::span<const float> window(int w) const;

  /// Slot holding geometry view `v`, or -1.
  int slot_of(int v) const;

  /// Stack with the listed windows only.
  ProjectionStack select_windows(std::span<const int> windows) const;
  /// Stack restricted to the listed geometry views, in the given order.
  ProjectionStack select_views(std::span<const int> view_indices) const;

  double window_sum(int w) const;

  /// Checks shape consistency and the value invariants of `kind`.
  void validate() const;
};

}  // namespace spect

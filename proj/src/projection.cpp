#include "spect/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spect {

std::string to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::Mean: return "mean";
    case ProjectionKind::Sampled: return "sampled";
    case ProjectionKind::Synthesized: return "synthesized";
  }
  return "mean";
}

ProjectionKind projection_kind_from_string(const std::string& s) {
  if (s == "mean") return ProjectionKind::Mean;
  if (s == "sampled") return ProjectionKind::Sampled;
  if (s == "synthesized") return ProjectionKind::Synthesized;
  throw std::invalid_argument("unknown projection kind '" + s + "'");
}

ProjectionStack::ProjectionStack(ScanGeometry geom, std::vector<int> view_indices, int windows,
                                 ProjectionKind k)
    : geometry(std::move(geom)), views(std::move(view_indices)), n_windows(windows), kind(k) {
  if (n_windows < 1) throw std::invalid_argument("ProjectionStack: need at least one window");
  for (int v : views)
    if (v < 0 || v >= geometry.n_views())
      throw std::invalid_argument("ProjectionStack: view index out of range");
  data.assign(window_size() * n_windows, 0.0f);
}

std::span<float> ProjectionStack::view(int w, int slot) {
  std::size_t const n = pixels_per_view();
  return {data.data() + (static_cast<std::size_t>(w) * views.size() + slot) * n, n};
}

std::span<const float> ProjectionStack::view(int w, int slot) const {
  std::size_t const n = pixels_per_view();
  return {data.data() + (static_cast<std::size_t>(w) * views.size() + slot) * n, n};
}

std::span<float> ProjectionStack::window(int w) {
  return {data.data() + static_cast<std::size_t>(w) * window_size(), window_size()};
}

std::span<const float> ProjectionStack::window(int w) const {
  return {data.data() + static_cast<std::size_t>(w) * window_size(), window_size()};
}

int ProjectionStack::slot_of(int v) const {
  auto it = std::find(views.begin(), views.end(), v);
  return it == views.end() ? -1 : static_cast<int>(it - views.begin());
}

ProjectionStack ProjectionStack::select_windows(std::span<const int> windows) const {
  ProjectionStack out(geometry, views, static_cast<int>(windows.size()), kind);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i] < 0 || windows[i] >= n_windows)
      throw std::invalid_argument("select_windows: window out of range");
    auto src = window(windows[i]);
    std::copy(src.begin(), src.end(), out.window(static_cast<int>(i)).begin());
  }
  return out;
}

ProjectionStack ProjectionStack::select_views(std::span<const int> view_indices) const {
  ProjectionStack out(geometry, {view_indices.begin(), view_indices.end()}, n_windows, kind);
  for (std::size_t i = 0; i < view_indices.size(); ++i) {
    int const slot = slot_of(view_indices[i]);
    if (slot < 0) throw std::invalid_argument("select_views: view not present in stack");
    for (int w = 0; w < n_windows; ++w) {
      auto src = view(w, slot);
      std::copy(src.begin(), src.end(), out.view(w, static_cast<int>(i)).begin());
    }
  }
  return out;
}

double ProjectionStack::window_sum(int w) const {
  auto s = window(w);
  return std::accumulate(s.begin(), s.end(), 0.0);
}

void ProjectionStack::validate() const {
  geometry.validate();
  if (data.size() != window_size() * n_windows)
    throw std::invalid_argument("ProjectionStack: data size does not match shape");
  if (kind == ProjectionKind::Synthesized) return;
  for (float x : data) {
    if (!(x >= 0.0f)) throw std::invalid_argument("ProjectionStack: negative or non-finite value");
    if (kind == ProjectionKind::Sampled && x != std::floor(x))
      throw std::invalid_argument("ProjectionStack: sampled counts must be integers");
  }
}

}  // namespace spect

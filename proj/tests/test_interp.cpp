#include <doctest.h>

#include <stdexcept>

#include "helpers.hpp"
#include "spect/interp.hpp"

using namespace spect;
using testing::all_views;

namespace {

ProjectionStack ramp_scan(int n_views, int windows) {
  auto const g = make_geometry(n_views, CircularOrbit{200}, 8, 8, 4.0, windows);
  ProjectionStack p(g, all_views(n_views), windows, ProjectionKind::Sampled);
  for (int w = 0; w < windows; ++w)
    for (int v = 0; v < n_views; ++v) {
      auto img = p.view(w, v);
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(w + 1) * (0.5f * i + 3.0f * v);
    }
  return p;
}

}  // namespace

TEST_CASE("identical brackets are copied") {
  auto const g = make_geometry(8, CircularOrbit{200}, 8, 8, 4.0, 2);
  ProjectionStack full(g, all_views(8), 2, ProjectionKind::Sampled);
  for (std::size_t i = 0; i < full.data.size(); ++i) full.data[i] = static_cast<float>(i % 64) + 0.25f;
  auto const split = split_views(g, 2);
  auto const out = linear_interpolate_views(full.select_views(split.measured), split);
  CHECK(out.views == split.skipped);
  CHECK(out.kind == ProjectionKind::Synthesized);
  for (int w = 0; w < 2; ++w)
    for (int s = 0; s < out.n_slots(); ++s) {
      auto const a = out.view(w, s);
      auto const b = full.view(w, 0);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("midway views are the mean of their brackets") {
  auto const full = ramp_scan(8, 1);
  auto const split = split_views(full.geometry, 2);
  auto const out = linear_interpolate_views(full.select_views(split.measured), split);
  // View 1 sits midway between 0 and 2; view 7 between 6 and 0 across 360.
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(out.view(0, out.slot_of(1))[i] == 0.5f * (full.view(0, 0)[i] + full.view(0, 2)[i]));
    CHECK(out.view(0, out.slot_of(7))[i] == 0.5f * (full.view(0, 6)[i] + full.view(0, 0)[i]));
  }
}

TEST_CASE("a linear ramp in view index is recovered") {
  auto const full = ramp_scan(13, 3);
  auto const split = split_views(full.geometry, 3);  // measured 0,3,6,9,12
  auto const out = linear_interpolate_views(full.select_views(split.measured), split);
  for (int w = 0; w < 3; ++w)
    for (int v : split.skipped) {
      auto const a = out.view(w, out.slot_of(v));
      auto const b = full.view(w, v);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
    }
}

TEST_CASE("interpolation commutes with scaling") {
  auto full = ramp_scan(12, 1);
  auto const split = split_views(full.geometry, 4);
  auto const base = linear_interpolate_views(full.select_views(split.measured), split);
  for (float& x : full.data) x *= 2.0f;
  auto const scaled = linear_interpolate_views(full.select_views(split.measured), split);
  for (std::size_t i = 0; i < base.data.size(); ++i) CHECK(scaled.data[i] == 2.0f * base.data[i]);
}

TEST_CASE("rotating every angle label leaves values unchanged") {
  auto full = ramp_scan(12, 1);
  auto const split = split_views(full.geometry, 4);
  auto const base = linear_interpolate_views(full.select_views(split.measured), split);
  for (double& a : full.geometry.view_angles_deg) a += 17.0;
  auto const rotated = linear_interpolate_views(full.select_views(split.measured), split);
  for (std::size_t i = 0; i < base.data.size(); ++i)
    CHECK(rotated.data[i] == doctest::Approx(base.data[i]).epsilon(1e-6));
}

TEST_CASE("interpolation needs two measured views") {
  auto const full = ramp_scan(8, 1);
  auto const split = split_views(full.geometry, 8);
  CHECK_THROWS_AS(linear_interpolate_views(full.select_views(split.measured), split), std::invalid_argument);
}

TEST_CASE("assemble_regime") {
  auto const full = ramp_scan(120, 3);
  auto const split = split_views(full.geometry, 4);
  auto const measured = full.select_views(split.measured);
  auto const lin = linear_interpolate_views(measured, split);

  auto const f = assemble_regime(full, measured, nullptr, Regime::Full);
  CHECK(f.stack.data == full.data);
  CHECK(f.views == all_views(120));

  auto const p = assemble_regime(full, measured, nullptr, Regime::Partial);
  CHECK(p.views.size() == 30);
  CHECK(p.stack.n_slots() == 30);

  auto const l = assemble_regime(full, measured, &lin, Regime::LinInt);
  CHECK(l.views == all_views(120));
  for (int w = 0; w < 3; ++w)
    for (int v : split.measured) {
      auto const a = l.stack.view(w, l.stack.slot_of(v));
      auto const b = measured.view(w, measured.slot_of(v));
      CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }

  CHECK_THROWS_AS(assemble_regime(full, measured, nullptr, Regime::Field), std::invalid_argument);
  auto const wrong = lin.select_views(std::vector<int>{1, 2});
  CHECK_THROWS_AS(assemble_regime(full, measured, &wrong, Regime::LinInt), std::invalid_argument);
  CHECK(regime_from_string("nerf") == Regime::Field);
  CHECK(to_string(Regime::LinInt) == "linint");
  CHECK_THROWS_AS(regime_from_string("bogus"), std::invalid_argument);
}

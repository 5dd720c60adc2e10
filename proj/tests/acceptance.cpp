// Acceptance harness: runs the twelve acceptance checks and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spect/container.hpp"
#include "spect/field.hpp"
#include "spect/geometry.hpp"
#include "spect/interp.hpp"
#include "spect/metrics.hpp"
#include "spect/mlp.hpp"
#include "spect/optim.hpp"
#include "spect/phantom.hpp"
#include "spect/pipeline.hpp"
#include "spect/projector.hpp"
#include "spect/recon.hpp"
#include "spect/simulate.hpp"

using namespace spect;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<int> all_views(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

ProjectionStack zeros_like(const ProjectionStack& p) {
  ProjectionStack z = p;
  std::fill(z.data.begin(), z.data.end(), 0.0f);
  return z;
}

// 1 ---------------------------------------------------------------------------

Outcome adjoint() {
  int const n = 32, n_views = 24, trials = 20;
  double worst = 0.0;
  for (bool physics : {false, true}) {
    for (int t = 0; t < trials; ++t) {
      std::mt19937_64 rng(derive_seed(101, t, physics));
      std::uniform_real_distribution<float> u01(0.0f, 1.0f);
      SystemModel m;
      m.geometry = make_geometry(n_views, EllipticalOrbit{110, 90, 10}, n, n, 4.0, 1);
      m.mu_map = ImageVolume(n, n, n, {4.0, 4.0, 4.0}, 0.0f);
      m.psf_sigma0_mm = 0.0;
      m.psf_slope = 0.0;
      if (physics) {
        for (float& v : m.mu_map.values) v = 0.02f * u01(rng);
        m.psf_sigma0_mm = 1.5;
        m.psf_slope = 0.03;
      }
      Projector const a(m);
      auto const views = all_views(n_views);
      ImageVolume x(n, n, n, {4.0, 4.0, 4.0});
      for (float& v : x.values) v = u01(rng);
      ProjectionStack p(m.geometry, views, 1, ProjectionKind::Mean);
      for (float& v : p.data) v = u01(rng);
      auto const ax = a.forward(x, views);
      auto const atp = a.back(p, views);
      double const lhs = dot(ax.data, p.data);
      double const rhs = dot(x.values, atp.values);
      double const gap =
          std::abs(lhs - rhs) / (std::sqrt(dot(ax.data, ax.data)) * std::sqrt(dot(p.data, p.data)));
      worst = std::max(worst, gap);
    }
  }
  return {worst < 1e-5, "max normalized gap " + fmt("%.2e", worst) + " over 40 trials"};
}

// 2 ---------------------------------------------------------------------------

// Hidden units that are active; central differences are only valid when
// p - h and p + h share this pattern (no ReLU kink inside the stencil).
std::vector<bool> active_pattern(const Mlp<double>& net, const Mlp<double>::Matrix& x) {
  Mlp<double>::Cache cache;
  net.forward(x, &cache);
  std::vector<bool> out;
  for (std::size_t l = 1; l + 1 < cache.activations.size(); ++l)
    for (Eigen::Index k = 0; k < cache.activations[l].size(); ++k) out.push_back(cache.activations[l].data()[k] > 0);
  return out;
}

Outcome gradients() {
  using MatD = Mlp<double>::Matrix;
  double worst = 0.0;
  int refined = 0;
  for (auto act : {Activation::Relu, Activation::Tanh}) {
    FieldArchitecture arch;
    arch.hidden_layers = 2;
    arch.hidden_width = 8;
    arch.activation = act;
    for (int b = 0; b < 10; ++b) {
      FieldModel const fm = FieldModel::create(arch, 3, 300 + b);
      Mlp<double> net(fm.net.widths(), fm.net.activation());
      std::copy(fm.net.parameters().begin(), fm.net.parameters().end(), net.parameters().begin());
      for (int l = 0; l < net.n_layers(); ++l) net.bias(l).setConstant(0.05);

      std::mt19937_64 rng(derive_seed(202, b));
      std::uniform_real_distribution<double> uu(-1.0, 1.0), ang(0.0, 360.0), rr(0.7, 1.0), tt(0.0, 3.0);
      std::vector<CoordinateSample> cs(64);
      for (auto& c : cs) {
        auto const sc = sincos_deg(ang(rng));
        c = {float(uu(rng)), float(uu(rng)), float(sc.sin), float(sc.cos), float(rr(rng))};
      }
      MatD const x = encode_batch(arch.encoding, cs).cast<double>();
      MatD y(3, x.cols());
      for (Eigen::Index j = 0; j < y.size(); ++j) y.data()[j] = tt(rng);

      auto const g = huber_batch_gradient<double>(net, x, y, 1.0).grad;
      for (std::size_t i = 0; i < net.n_parameters(); ++i) {
        double const p0 = net.parameters()[i];
        double fd = 0.0;
        for (double h = 1e-5; h >= 1e-9; h *= 0.01) {
          net.parameters()[i] = p0 + h;
          double const up = huber_batch_gradient<double>(net, x, y, 1.0).loss;
          auto const pat_up = act == Activation::Relu ? active_pattern(net, x) : std::vector<bool>{};
          net.parameters()[i] = p0 - h;
          double const dn = huber_batch_gradient<double>(net, x, y, 1.0).loss;
          auto const pat_dn = act == Activation::Relu ? active_pattern(net, x) : std::vector<bool>{};
          net.parameters()[i] = p0;
          fd = (up - dn) / (2 * h);
          if (pat_up == pat_dn) break;
          if (h == 1e-5) ++refined;
        }
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-3, std::abs(fd) + std::abs(g[i])));
      }
    }
  }
  return {worst < 1e-4, "max relative error " + fmt("%.2e", worst) + " over 10 batches x {relu, tanh}; " +
                            std::to_string(refined) + " stencils straddling a ReLU kink used a smaller step"};
}

// 3, 4 ------------------------------------------------------------------------

struct SmallScan {
  Acquisition acq;
  ImageVolume truth;
};

SmallScan small_scan() {
  int const n = 16;
  double const pitch = 19.2;
  PhantomSpec const spec = PhantomSpec::standard();
  Phantom const ph = build_phantom(spec, {n, n, n}, {pitch, pitch, pitch});
  SystemModel m;
  m.geometry = make_geometry(32, EllipticalOrbit{200, 160, 0}, n, n, pitch, 3);
  m.mu_map = ph.mu_map;
  SmallScan s;
  s.truth = ph.activity;
  s.acq = acquire(ph.activity, m, ScatterParams{}, 2e5, split_views(m.geometry, 1), 303);
  return s;
}

Outcome mlem_monotone() {
  SmallScan const s = small_scan();
  Projector const a(s.acq.model);
  auto const views = all_views(s.acq.model.geometry.n_views());
  std::vector<int> const peak{0};
  ReconConfig cfg;
  cfg.n_subsets = 1;
  cfg.n_iterations = 20;
  cfg.track_loglik = true;
  auto const r = osem(s.acq.full_scan.select_windows(peak), s.acq.scatter, a, views, cfg);
  double worst = 0.0;
  for (std::size_t k = 1; k < r.loglik.size(); ++k)
    worst = std::max(worst, (r.loglik[k - 1] - r.loglik[k]) / std::abs(r.loglik[k - 1]));
  bool const ok = r.loglik.size() == 21 && worst <= 1e-9;
  return {ok, "largest relative decrease " + fmt("%.2e", std::max(worst, 0.0)) + ", loglik " +
                  fmt("%.6g", r.loglik.front()) + " -> " + fmt("%.6g", r.loglik.back())};
}

Outcome em_fixed_point() {
  SmallScan const s = small_scan();
  SystemModel const& m = s.acq.model;
  Projector const a(m);
  auto const views = all_views(m.geometry.n_views());
  auto const y = a.forward(s.truth, views);
  ReconConfig cfg;
  cfg.n_iterations = 1;
  auto const r = osem(y, zeros_like(y), a, views, cfg, s.truth);
  // Empty voxels may only rise to the nonnegativity floor.
  double const floor = static_cast<float>(cfg.eps_x);
  double worst = 0.0;
  std::size_t zero_moved = 0;
  for (std::size_t j = 0; j < r.image.size(); ++j) {
    double const t = s.truth.values[j], x = r.image.values[j];
    if (t > 0.0)
      worst = std::max(worst, std::abs(x - t) / t);
    else if (x > floor * (1.0 + 1e-6))
      ++zero_moved;
  }
  return {worst <= 1e-6 && zero_moved == 0,
          "max relative change " + fmt("%.2e", worst) + " (6 subsets), empty voxels above floor: " +
              std::to_string(zero_moved)};
}

// 5 ---------------------------------------------------------------------------

Outcome tew_closure() {
  int const n = 32;
  double const pitch = 9.6;
  Phantom const ph = build_phantom(PhantomSpec::standard(), {n, n, n}, {pitch, pitch, pitch});
  SystemModel m;
  m.geometry = make_geometry(24, EllipticalOrbit{200, 160, 0}, n, n, pitch, 3);
  m.mu_map = ph.mu_map;
  ScatterParams const p;
  Acquisition const acq = acquire(ph.activity, m, p, 1e6, split_views(m.geometry, 1), 505);
  auto const est = tew_scatter_estimate(acq.mean, p);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < est.data.size(); ++i)
    if (std::memcmp(&est.data[i], &acq.scatter.data[i], sizeof(float)) != 0) ++mismatched;
  bool const ok = est.data.size() == acq.scatter.data.size() && mismatched == 0;
  return {ok, std::to_string(mismatched) + " of " + std::to_string(est.data.size()) + " pixels differ"};
}

// 6 ---------------------------------------------------------------------------

Outcome unit_values() {
  std::vector<std::string> failed;
  auto expect = [&](bool c, const char* what) {
    if (!c) failed.push_back(what);
  };
  auto huber1 = [](double a, double delta) {
    std::vector<double> const pred{a}, target{0.0};
    return huber_loss<double>(pred, target, delta);
  };
  expect(huber1(0.0, 1.0).loss == 0.0, "huber a=0");
  expect(huber1(2.0, 1.0).loss == 1.5, "huber a=2");
  {
    double const d = 1.0, lo = d - 1e-7, hi = d + 1e-7;
    auto const a = huber1(lo, d), b = huber1(hi, d);
    expect(std::abs(a.loss - b.loss) < 1e-6 && std::abs(a.gradient[0] - b.gradient[0]) < 1e-6, "huber seam");
  }
  {
    std::vector<double> p{0.3, -1.2, 4.0};
    auto const before = p;
    std::vector<double> const g(3, 0.0);
    AdamState<double> st(3);
    adam_step<double>(p, g, st, 1e-3);
    expect(p == before, "adam zero gradient");
  }
  {
    std::vector<double> p{1.0, 1.0, 1.0};
    std::vector<double> const g{0.5, -0.5, 500.0};
    AdamState<double> st(3);
    adam_step<double>(p, g, st, 1e-3);
    expect(std::abs((p[0] - 1.0) + 1e-3) < 1e-9 && std::abs((p[1] - 1.0) - 1e-3) < 1e-9, "adam first step");
    expect(std::abs(std::abs(p[2] - 1.0) - std::abs(p[0] - 1.0)) < 1e-9, "adam scale invariance");
  }
  {
    PlateauScheduler s;
    double lr = 1e-3;
    bool changed = false;
    for (int e = 0; e < 50; ++e) {
      double const next = s.step(lr, 1.0 - 0.01 * e);
      changed = changed || next != lr;
      lr = next;
    }
    expect(!changed, "plateau decreasing");
  }
  {
    PlateauConfig c;
    c.factor = 0.5;
    c.patience = 10;
    PlateauScheduler s(c);
    double lr = 1e-3;
    lr = s.step(lr, 1.0);
    int halved_at = -1;
    for (int e = 1; e <= 10 && halved_at < 0; ++e) {
      lr = s.step(lr, 1.0);
      if (lr != 1e-3) halved_at = e;
    }
    expect(halved_at == 10 && lr == 5e-4, "plateau halves at epoch 10");
  }
  {
    PlateauConfig c;
    c.patience = 1;
    c.min_lr = 1e-4;
    PlateauScheduler s(c);
    double lr = 1e-3, lowest = lr;
    for (int e = 0; e < 100; ++e) lowest = std::min(lowest, lr = s.step(lr, 1.0));
    expect(lowest == 1e-4, "plateau min_lr");
  }
  std::string detail = "9 examples";
  for (auto const& f : failed) detail += ", failed: " + f;
  return {failed.empty(), detail};
}

// 7, 8, 9 ---------------------------------------------------------------------

struct DeskRuns {
  std::vector<std::vector<MetricsRow>> rows;  // per seed
  PhantomSpec phantom;
  std::string error;
};

std::vector<MetricsRow> rows_from_json(const json& j) {
  std::vector<MetricsRow> out;
  auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  for (auto const& r : j.at("rows")) {
    MetricsRow m;
    m.regime = r.at("regime");
    m.df = r.at("df");
    m.voi = r.at("voi");
    m.nrmsd = num(r.at("nrmsd"));
    m.ar = num(r.at("ar"));
    m.cnr = num(r.at("cnr"));
    m.rcnr = num(r.at("rcnr"));
    out.push_back(m);
  }
  return out;
}

const MetricsRow* find_row(const std::vector<MetricsRow>& rows, const std::string& regime, int df,
                           const std::string& voi) {
  for (auto const& r : rows)
    if (r.regime == regime && r.df == df && r.voi == voi) return &r;
  return nullptr;
}

DeskRuns run_desk(const fs::path& config_path, const fs::path& work, int n_seeds) {
  DeskRuns d;
  try {
    ExperimentConfig base = load_config(config_path);
    d.phantom = base.phantom;
    for (int s = 0; s < n_seeds; ++s) {
      ExperimentConfig c = base;
      c.seed = static_cast<std::uint64_t>(s);
      c.out_dir = work / ("desk_seed" + std::to_string(s));
      fs::remove_all(c.out_dir);
      auto const t0 = std::chrono::steady_clock::now();
      run_pipeline(c);
      double const sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ifstream in(c.out_dir / "metrics.json");
      d.rows.push_back(rows_from_json(json::parse(in)));
      std::cout << "  desk seed " << s << " finished in " << fmt("%.0f", sec) << " s" << std::endl;
    }
  } catch (const std::exception& e) {
    d.error = e.what();
  }
  return d;
}

Outcome table1_direction(const DeskRuns& d, const std::vector<int>& dfs) {
  if (!d.error.empty()) return {false, "desk runs failed: " + d.error};
  bool ok = true;
  std::string detail;
  for (int df : dfs) {
    int wins = 0;
    std::string per_seed;
    for (auto const& rows : d.rows) {
      auto const* f = find_row(rows, "nerf", df, "projections");
      auto const* l = find_row(rows, "linint", df, "projections");
      if (!f || !l) return {false, "missing projection rows at DF=" + std::to_string(df)};
      if (f->nrmsd < l->nrmsd) ++wins;
      per_seed += " " + fmt("%.3f", f->nrmsd) + "/" + fmt("%.3f", l->nrmsd);
    }
    ok = ok && wins >= 4;
    detail += "DF=" + std::to_string(df) + ": " + std::to_string(wins) + "/" + std::to_string(d.rows.size()) +
              " (field/linint" + per_seed + ") ";
  }
  return {ok && d.rows.size() == 5, detail};
}

std::vector<SphereInsert> spheres_by_volume(const PhantomSpec& spec) {
  auto s = spec.spheres;
  std::stable_sort(s.begin(), s.end(), [](auto const& a, auto const& b) { return a.volume_ml < b.volume_ml; });
  return s;
}

Outcome regime_ordering(const DeskRuns& d) {
  if (!d.error.empty()) return {false, "desk runs failed: " + d.error};
  auto const spheres = spheres_by_volume(d.phantom);
  if (spheres.size() < 2) return {false, "phantom has fewer than two spheres"};
  std::vector<std::string> const largest{spheres[spheres.size() - 1].name, spheres[spheres.size() - 2].name};
  int wins = 0;
  std::string per_seed;
  for (auto const& rows : d.rows) {
    bool seed_ok = true;
    for (auto const& voi : largest) {
      auto const* f = find_row(rows, "nerf", 4, voi);
      auto const* l = find_row(rows, "linint", 4, voi);
      auto const* p = find_row(rows, "partial", 4, voi);
      if (!f || !l || !p) return {false, "missing DF=4 rows for " + voi};
      seed_ok = seed_ok && f->rcnr >= l->rcnr && f->rcnr >= p->rcnr;
      per_seed += " " + fmt("%.0f", f->rcnr) + "/" + fmt("%.0f", l->rcnr) + "/" + fmt("%.0f", p->rcnr);
    }
    if (seed_ok) ++wins;
  }
  return {wins >= 4 && d.rows.size() == 5,
          std::to_string(wins) + "/" + std::to_string(d.rows.size()) + " seeds (RCNR % field/linint/partial," +
              " two largest spheres per seed:" + per_seed + ")"};
}

Outcome partial_volume(const DeskRuns& d) {
  if (!d.error.empty()) return {false, "desk runs failed: " + d.error};
  auto const spheres = spheres_by_volume(d.phantom);
  int monotone = 0;
  std::string detail;
  for (std::size_t s = 0; s < d.rows.size(); ++s) {
    bool ok = true;
    double prev = -1.0;
    std::string ars;
    for (auto const& sp : spheres) {
      auto const* r = find_row(d.rows[s], "full", 1, sp.name);
      if (!r) return {false, "missing full row for " + sp.name};
      ok = ok && r->ar >= prev;
      prev = r->ar;
      ars += (ars.empty() ? "" : " ") + fmt("%.3f", r->ar);
    }
    if (ok) ++monotone;
    if (s == 0) detail = "seed 0 AR by volume: " + ars;
  }
  return {monotone == static_cast<int>(d.rows.size()) && !d.rows.empty(),
          std::to_string(monotone) + "/" + std::to_string(d.rows.size()) + " seeds monotone; " + detail};
}

// 10 --------------------------------------------------------------------------

Outcome determinism(const fs::path& config_path, const fs::path& work) {
  std::vector<std::string> manifests;
  for (int run = 0; run < 2; ++run) {
    fs::path const out = work / ("determinism_run" + std::to_string(run));
    fs::remove_all(out);
    std::string const cmd = std::string(SPARSESPECT_EXE) + " pipeline --config " + config_path.string() +
                            " --out " + out.string() + " > " + (work / "determinism.log").string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "pipeline run " + std::to_string(run) + " failed"};
    std::ifstream in(out / "manifest.json");
    std::stringstream ss;
    ss << in.rdbuf();
    manifests.push_back(ss.str());
  }
  json const m = json::parse(manifests[0]);
  std::size_t const n = m.at("artifacts").size();
  return {manifests[0] == manifests[1] && n > 0,
          std::to_string(n) + " artifacts, manifests " + (manifests[0] == manifests[1] ? "identical" : "differ")};
}

// 11 --------------------------------------------------------------------------

Outcome container_roundtrip(const fs::path& work) {
  std::mt19937_64 rng(1111);
  std::uniform_int_distribution<int> rank_d(0, 4), dim_d(0, 9), coin(0, 1);
  std::uniform_int_distribution<std::uint32_t> bits;
  fs::path const path = work / "roundtrip.spj";
  int failures = 0;
  for (int t = 0; t < 1000; ++t) {
    ArrayFile f;
    f.dtype = coin(rng) ? ArrayFile::DType::F32 : ArrayFile::DType::I32;
    int const rank = rank_d(rng);
    for (int k = 0; k < rank; ++k) {
      f.shape.push_back(dim_d(rng));
      if (coin(rng) || k > 0) f.axes.push_back("a" + std::to_string(k));
    }
    if (f.axes.size() != f.shape.size()) f.axes.clear();
    f.header["trial"] = t;
    std::size_t const n = f.element_count();
    if (f.dtype == ArrayFile::DType::F32) {
      f.f32.resize(n);
      for (auto& v : f.f32) {
        std::uint32_t const b = bits(rng);
        std::memcpy(&v, &b, 4);
      }
    } else {
      f.i32.resize(n);
      for (auto& v : f.i32) v = static_cast<std::int32_t>(bits(rng));
    }
    write_container(path, f);
    ArrayFile const g = read_container(path);
    bool ok = g.dtype == f.dtype && g.shape == f.shape && g.axes == f.axes && g.header.at("trial") == t &&
              g.f32.size() == f.f32.size() && g.i32.size() == f.i32.size();
    if (ok && !f.f32.empty()) ok = std::memcmp(g.f32.data(), f.f32.data(), 4 * n) == 0;
    if (ok && !f.i32.empty()) ok = std::memcmp(g.i32.data(), f.i32.data(), 4 * n) == 0;
    if (!ok) ++failures;
  }
  fs::remove(path);
  return {failures == 0, std::to_string(1000 - failures) + "/1000 bit-exact"};
}

// 12 --------------------------------------------------------------------------

Outcome two_point_peaks(const fs::path& work) {
  int const nu = 65, nv = 8, n_views = 36, df = 4;
  double const pitch = 2.0;
  SystemModel m;
  m.geometry = make_geometry(n_views, CircularOrbit{120.0}, nu, nv, pitch, 1);
  m.mu_map = ImageVolume(nu, nu, nv, {pitch, pitch, pitch}, 0.0f);
  m.psf_sigma0_mm = 2.0;
  m.psf_slope = 0.0;
  // Two point sources at x = +-40 mm on the central row.
  ImageVolume src(nu, nu, nv, {pitch, pitch, pitch}, 0.0f);
  int const c = nu / 2, z = nv / 2;
  src.at(c - 20, c, z) = 1.0f;
  src.at(c + 20, c, z) = 1.0f;

  Projector const a(m);
  auto const views = all_views(n_views);
  auto const scaled = scale_to_counts(a.forward(src, views), 4e4);
  ProjectionStack const scan = poisson_sample(scaled.stack, 1212);
  ViewSplit const split = split_views(m.geometry, df);
  ProjectionStack const measured = scan.select_views(split.measured);

  ProjectionStack const lin = linear_interpolate_views(measured, split);
  TrainConfig tc;
  tc.arch.hidden_layers = 6;
  tc.arch.hidden_width = 128;
  tc.batch = 1024;
  tc.epochs = 300;
  tc.seed = 12;
  auto const trained = train(measured, tc);
  ProjectionStack const field = synthesize(trained.model, m.geometry, split.skipped, tc.upsample);

  // Skipped views halfway between brackets whose spots sit at different u.
  std::vector<int> const probe{10, 26};
  bool ok = true;
  std::string detail;
  std::ofstream csv(work / "two_point_profiles.csv");
  csv << "view,u,truth,linint,field\n";
  for (int v : probe) {
    auto row = [&](const ProjectionStack& p) {
      auto const img = p.view(0, p.slot_of(v));
      std::vector<float> r;
      for (auto const& s : line_profile(img, nu, nv, {0, z}, {nu - 1, z})) r.push_back(s.value);
      return r;
    };
    auto const rf = row(field), rl = row(lin), rt = row(scan);
    for (int u = 0; u < nu; ++u) csv << v << ',' << u << ',' << rt[u] << ',' << rl[u] << ',' << rf[u] << '\n';
    int const pf = count_peaks(rf), pl = count_peaks(rl), pt = count_peaks(rt);
    ok = ok && pf == 2 && pl == 4;
    detail += "view " + std::to_string(v) + ": field " + std::to_string(pf) + ", linint " + std::to_string(pl) +
              ", truth " + std::to_string(pt) + "; ";
  }
  detail += "best epoch " + std::to_string(trained.report.best_epoch + 1);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::string work = "acceptance_work";
  int seeds = 5;
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
  app.add_option("--work", work, "scratch directory");
  app.add_option("--seeds", seeds, "desk-scale seeds (criteria 7-9)");
  CLI11_PARSE(app, argc, argv);

  fs::path const configs = SPECT_CONFIG_DIR;
  fs::create_directories(work);
  auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

  DeskRuns desk;
  bool desk_ready = false;
  auto desk_runs = [&]() -> const DeskRuns& {
    if (!desk_ready) {
      desk = run_desk(configs / "desk.json", work, seeds);
      desk_ready = true;
    }
    return desk;
  };

  std::vector<std::pair<std::string, std::function<Outcome()>>> const criteria{
      {"adjoint correctness", adjoint},
      {"gradient correctness", gradients},
      {"MLEM monotonicity", mlem_monotone},
      {"EM fixed point", em_fixed_point},
      {"TEW closure", tew_closure},
      {"Huber/optimizer/scheduler unit values", unit_values},
      {"held-out view NRMSD field < linint", [&] { return table1_direction(desk_runs(), {2, 4}); }},
      {"regime ordering by RCNR at DF=4", [&] { return regime_ordering(desk_runs()); }},
      {"full-recon AR monotone in sphere volume", [&] { return partial_volume(desk_runs()); }},
      {"pipeline determinism", [&] { return determinism(configs / "tiny.json", work); }},
      {"container round trip", [&] { return container_roundtrip(work); }},
      {"two-point peak counts", [&] { return two_point_peaks(work); }},
  };

  std::ofstream summary(fs::path(work) / "summary.txt");
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    int const id = static_cast<int>(k) + 1;
    if (!wanted(id)) continue;
    auto const t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double const sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << " | " << o.detail << " | "
         << fmt("%.1f", sec) << " s";
    std::cout << line.str() << std::endl;
    summary << line.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

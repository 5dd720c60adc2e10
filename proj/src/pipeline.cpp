#include "spect/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include "spect/container.hpp"
#include "spect/error.hpp"
#include "spect/metrics.hpp"

namespace spect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Regime kSparseRegimes[] = {Regime::Partial, Regime::LinInt, Regime::Field};

// Re-throws with the stage name prefixed, keeping the exception type.
template <typename Fn>
void run_stage(const char* stage, Fn&& fn) {
  auto prefix = [&](const std::exception& e) { return std::string("[") + stage + "] " + e.what(); };
  try {
    fn();
  } catch (const FormatError& e) {
    throw FormatError(prefix(e));
  } catch (const NumericFailure& e) {
    throw NumericFailure(prefix(e));
  } catch (const ConfigError& e) {
    throw ConfigError(prefix(e));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(prefix(e));
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix(e));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << text;
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

std::string df_suffix(int df) { return "_df" + std::to_string(df); }

SystemModel load_system(const ExperimentConfig& config) {
  SystemModel m;
  m.geometry = config.geometry();
  m.mu_map = volume_from_container(read_container(config.out_dir / "mu_map.spj"));
  m.psf_sigma0_mm = config.psf_sigma0_mm;
  m.psf_slope = config.psf_slope;
  fs::path const sys = config.out_dir / "system.json";
  if (fs::exists(sys)) m.calibration = read_json(sys).at("calibration").get<double>();
  return m;
}

std::vector<VoiMask> load_masks(const ExperimentConfig& config) {
  return masks_from_container(read_container(config.out_dir / "masks.spj"));
}

const VoiMask& background_of(const std::vector<VoiMask>& masks) {
  for (auto const& m : masks)
    if (m.role == VoiMask::Role::Background) return m;
  throw FormatError("masks: no background mask");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dfs.empty()) throw ConfigError("config: df list is empty");
  for (int df : dfs)
    if (df < 1 || df > n_views) throw ConfigError("config: df " + std::to_string(df) + " out of range");
  if (!(count_target > 0.0)) throw ConfigError("config: count_target must be positive");
  try {
    phantom.validate();
    scatter.validate();
    train.validate();
    recon.validate();
    geometry();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScanGeometry ExperimentConfig::geometry() const {
  return make_geometry(n_views, orbit, det_nu, det_nv, det_pixel_mm, 3);
}

void to_json(json& j, const ExperimentConfig& c) {
  json orbit;
  if (auto const* circ = std::get_if<CircularOrbit>(&c.orbit)) {
    orbit = {{"type", "circular"}, {"radius_mm", circ->radius_mm}};
  } else {
    auto const& e = std::get<EllipticalOrbit>(c.orbit);
    orbit = {{"type", "elliptical"}, {"semi_x_mm", e.semi_x_mm}, {"semi_y_mm", e.semi_y_mm},
             {"clearance_mm", e.clearance_mm}};
  }
  j = json{{"phantom", c.phantom},
           {"n_views", c.n_views},
           {"orbit", orbit},
           {"det_nu", c.det_nu},
           {"det_nv", c.det_nv},
           {"det_pixel_mm", c.det_pixel_mm},
           {"psf_sigma0_mm", c.psf_sigma0_mm},
           {"psf_slope", c.psf_slope},
           {"count_target", c.count_target},
           {"scatter", c.scatter},
           {"dfs", c.dfs},
           {"train", c.train},
           {"recon", c.recon},
           {"seed", c.seed}};
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    if (j.contains("phantom_spec")) {
      fs::path p = j.at("phantom_spec").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      c.phantom = read_json(p).get<PhantomSpec>();
    } else if (j.contains("phantom")) {
      c.phantom = j.at("phantom").get<PhantomSpec>();
    }
    c.n_views = j.value("n_views", c.n_views);
    if (j.contains("orbit")) {
      auto const& o = j.at("orbit");
      std::string const type = o.value("type", std::string("elliptical"));
      if (type == "circular") {
        c.orbit = CircularOrbit{o.value("radius_mm", 250.0)};
      } else if (type == "elliptical") {
        c.orbit = EllipticalOrbit{o.value("semi_x_mm", 200.0), o.value("semi_y_mm", 160.0),
                                  o.value("clearance_mm", 0.0)};
      } else {
        throw ConfigError("config: unknown orbit type '" + type + "'");
      }
    }
    c.det_nu = j.value("det_nu", c.det_nu);
    c.det_nv = j.value("det_nv", c.det_nv);
    c.det_pixel_mm = j.value("det_pixel_mm", c.det_pixel_mm);
    c.psf_sigma0_mm = j.value("psf_sigma0_mm", c.psf_sigma0_mm);
    c.psf_slope = j.value("psf_slope", c.psf_slope);
    c.count_target = j.value("count_target", c.count_target);
    if (j.contains("scatter")) c.scatter = j.at("scatter").get<ScatterParams>();
    if (j.contains("dfs")) c.dfs = j.at("dfs").get<std::vector<int>>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    if (j.contains("recon")) c.recon = j.at("recon").get<ReconConfig>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

std::uint64_t train_seed(const ExperimentConfig& config, int df) {
  return derive_seed(config.seed, 0x7261696eULL, static_cast<std::uint64_t>(df));
}

std::string scan_name(int df) { return "scan" + df_suffix(df) + ".spj"; }
std::string model_name(int df) { return "model" + df_suffix(df) + ".spj"; }
std::string synth_name(Regime regime, int df) { return to_string(regime) + df_suffix(df) + ".spj"; }
std::string recon_name(Regime regime, int df) {
  return regime == Regime::Full ? "recon_full.spj" : "recon_" + to_string(regime) + df_suffix(df) + ".spj";
}

void stage_phantom(const ExperimentConfig& config) {
  run_stage("phantom", [&] {
    fs::create_directories(config.out_dir);
    double const pitch = config.det_pixel_mm;
    Phantom const ph = build_phantom(config.phantom, {config.det_nu, config.det_nu, config.det_nv},
                                     {pitch, pitch, pitch});
    write_container(config.out_dir / "activity.spj", to_container(ph.activity, "activity_mbq_per_voxel"));
    write_container(config.out_dir / "mu_map.spj", to_container(ph.mu_map, "mu_per_mm"));
    write_container(config.out_dir / "masks.spj", to_container(ph.masks));
  });
}

void stage_simulate(const ExperimentConfig& config) {
  run_stage("simulate", [&] {
    ImageVolume const activity = volume_from_container(read_container(config.out_dir / "activity.spj"));
    SystemModel model = load_system(config);
    model.calibration = 1.0;
    ScanGeometry const g = config.geometry();
    Acquisition const acq = acquire(activity, model, config.scatter, config.count_target, split_views(g, 1),
                                    derive_seed(config.seed, 0x7363616eULL));
    write_container(config.out_dir / "scan_full.spj", to_container(acq.full_scan));
    write_container(config.out_dir / "scan_mean.spj", to_container(acq.mean));
    write_container(config.out_dir / "scatter_true.spj", to_container(acq.scatter));
    write_text(config.out_dir / "system.json",
               json{{"calibration", acq.model.calibration},
                    {"psf_sigma0_mm", config.psf_sigma0_mm},
                    {"psf_slope", config.psf_slope},
                    {"count_target", config.count_target}}
                   .dump(2));
    for (int df : config.dfs) {
      ViewSplit const split = split_views(g, df);
      write_container(config.out_dir / scan_name(df), to_container(acq.full_scan.select_views(split.measured)));
    }
  });
}

void stage_train(const ExperimentConfig& config, int df) {
  run_stage("train", [&] {
    ProjectionStack const measured = projections_from_container(read_container(config.out_dir / scan_name(df)));
    TrainConfig tc = config.train;
    tc.seed = train_seed(config, df);
    auto const result = train(measured, tc, [&](const EpochRecord& r) {
      if ((r.epoch + 1) % 10 == 0 || r.epoch + 1 == tc.epochs)
        std::clog << "train df=" << df << " epoch " << r.epoch + 1 << "/" << tc.epochs
                  << " train=" << r.train_loss << " val=" << r.val_loss << " lr=" << r.lr << "\n";
    });
    std::clog << "train df=" << df << " best epoch " << result.report.best_epoch + 1 << " ("
              << result.report.wall_seconds << " s)\n";
    ArrayFile f = to_container(result.model);
    f.header["best_epoch"] = result.report.best_epoch;
    f.header["best_val_loss"] = result.report.best_val_loss;
    write_container(config.out_dir / model_name(df), f);
    std::ostringstream log;
    log << "epoch,train_loss,val_loss,lr\n";
    for (auto const& r : result.report.epochs)
      log << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val_loss) << ',' << fmt(r.lr) << '\n';
    write_text(config.out_dir / ("train" + df_suffix(df) + ".csv"), log.str());
  });
}

void stage_synthesize(const ExperimentConfig& config, int df) {
  run_stage("synthesize", [&] {
    FieldModel const model = model_from_container(read_container(config.out_dir / model_name(df)));
    ScanGeometry const g = config.geometry();
    ViewSplit const split = split_views(g, df);
    ProjectionStack const synth = synthesize(model, g, split.skipped, config.train.upsample);
    write_container(config.out_dir / synth_name(Regime::Field, df), to_container(synth));
  });
}

void stage_interp(const ExperimentConfig& config, int df) {
  run_stage("interp", [&] {
    ProjectionStack const measured = projections_from_container(read_container(config.out_dir / scan_name(df)));
    ViewSplit const split = split_views(config.geometry(), df);
    write_container(config.out_dir / synth_name(Regime::LinInt, df),
                    to_container(linear_interpolate_views(measured, split)));
  });
}

void stage_recon(const ExperimentConfig& config, Regime regime, int df) {
  run_stage("recon", [&] {
    ProjectionStack const full = projections_from_container(read_container(config.out_dir / "scan_full.spj"));
    RegimeData data;
    if (regime == Regime::Full) {
      data = assemble_regime(full, full, nullptr, Regime::Full);
    } else {
      ProjectionStack const measured =
          projections_from_container(read_container(config.out_dir / scan_name(df)));
      if (regime == Regime::Partial) {
        data = assemble_regime(full, measured, nullptr, Regime::Partial);
      } else {
        ProjectionStack const synth =
            projections_from_container(read_container(config.out_dir / synth_name(regime, df)));
        data = assemble_regime(full, measured, &synth, regime);
      }
    }
    ProjectionStack const scatter = tew_scatter_estimate(data.stack, config.scatter);
    Projector const projector(load_system(config));

    ImageVolume const truth = volume_from_container(read_container(config.out_dir / "activity.spj"));
    auto const masks = load_masks(config);
    VoiMask const& bkg = background_of(masks);
    std::ostringstream log;
    log << "iteration,voi,ar,std_bkg\n";
    auto const result = osem(data.stack, scatter, projector, data.views, config.recon,
                             [&](int it, const ImageVolume& x) {
                               double const sd = bkg_std(x, bkg);
                               for (auto const& m : masks) {
                                 if (m.role != VoiMask::Role::Sphere) continue;
                                 log << it << ',' << m.name << ',' << fmt(activity_recovery(x, truth, m)) << ','
                                     << fmt(sd) << '\n';
                               }
                             });
    std::string const name = recon_name(regime, df);
    ArrayFile f = to_container(result.image, "activity_mbq_per_voxel");
    f.header["regime"] = to_string(regime);
    f.header["df"] = regime == Regime::Full ? 1 : df;
    f.header["views"] = data.views;
    write_container(config.out_dir / name, f);
    write_text(config.out_dir / (name.substr(0, name.size() - 4) + "_iter.csv"), log.str());
  });
}

void stage_evaluate(const ExperimentConfig& config) {
  run_stage("evaluate", [&] {
    ImageVolume const truth = volume_from_container(read_container(config.out_dir / "activity.spj"));
    auto const masks = load_masks(config);
    VoiMask const& bkg = background_of(masks);
    ProjectionStack const full = projections_from_container(read_container(config.out_dir / "scan_full.spj"));
    ScanGeometry const g = config.geometry();

    std::vector<MetricsRow> rows;
    ImageVolume const recon_full = volume_from_container(read_container(config.out_dir / recon_name(Regime::Full, 1)));
    double const std_full = bkg_std(recon_full, bkg);
    std::vector<double> cnr_full;
    for (auto const& m : masks) {
      if (m.role != VoiMask::Role::Sphere) continue;
      double const c = cnr(recon_full, m, bkg);
      cnr_full.push_back(c);
      double const ar = activity_recovery(recon_full, truth, m);
      rows.push_back({"full", 1, m.name, nrmsd(recon_full.values, truth.values, &m), ar, arnr(ar, std_full), c,
                      rcnr(c, c), std_full});
    }

    for (int df : config.dfs) {
      ViewSplit const split = split_views(g, df);
      int const peak[] = {0};
      ProjectionStack const withheld = full.select_views(split.skipped).select_windows(peak);
      std::vector<std::pair<Regime, ProjectionStack>> synthesized;
      for (Regime r : {Regime::LinInt, Regime::Field}) {
        fs::path const p = config.out_dir / synth_name(r, df);
        if (!fs::exists(p) || split.skipped.empty()) continue;
        ProjectionStack s = projections_from_container(read_container(p)).select_views(split.skipped);
        MetricsRow row{to_string(r), df, "projections"};
        row.nrmsd = nrmsd(s.window(0), withheld.window(0));
        rows.push_back(row);
        synthesized.emplace_back(r, std::move(s));
      }
      // Central-row profile through the first skipped view.
      if (!split.skipped.empty() && !synthesized.empty()) {
        int const view = split.skipped.front();
        int const row = g.det_nv / 2;
        std::ostringstream prof;
        prof << "u,measured";
        for (auto const& [r, s] : synthesized) prof << ',' << to_string(r);
        prof << '\n';
        auto const truth_profile = line_profile(withheld.view(0, 0), g.det_nu, g.det_nv, {0, row}, {g.det_nu - 1, row});
        for (std::size_t k = 0; k < truth_profile.size(); ++k) {
          prof << truth_profile[k].u << ',' << fmt(truth_profile[k].value);
          for (auto const& [r, s] : synthesized)
            prof << ',' << fmt(line_profile(s.view(0, s.slot_of(view)), g.det_nu, g.det_nv, {0, row},
                                            {g.det_nu - 1, row})[k].value);
          prof << '\n';
        }
        write_text(config.out_dir / ("profile" + df_suffix(df) + ".csv"), prof.str());
      }

      for (Regime r : kSparseRegimes) {
        fs::path const p = config.out_dir / recon_name(r, df);
        if (!fs::exists(p)) continue;
        ImageVolume const recon = volume_from_container(read_container(p));
        double const sd = bkg_std(recon, bkg);
        std::size_t k = 0;
        for (auto const& m : masks) {
          if (m.role != VoiMask::Role::Sphere) continue;
          double const ar = activity_recovery(recon, truth, m);
          double const c = cnr(recon, m, bkg);
          rows.push_back({to_string(r), df, m.name, nrmsd(recon.values, truth.values, &m), ar, arnr(ar, sd), c,
                          rcnr(c, cnr_full[k++]), sd});
        }
      }
    }
    write_text(config.out_dir / "metrics.csv", metrics_csv(rows));
    write_text(config.out_dir / "metrics.json", json{{"seed", config.seed}, {"rows", metrics_json(rows)}}.dump(2));
  });
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "' for hashing");
  std::string const bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

json run_pipeline(const ExperimentConfig& config) {
  run_stage("config", [&] { config.validate(); });
  fs::create_directories(config.out_dir);
  write_text(config.out_dir / "config.json", json(config).dump(2));

  std::vector<std::pair<std::string, std::string>> artifacts{
      {"config.json", "config"},       {"activity.spj", "phantom"},     {"mu_map.spj", "phantom"},
      {"masks.spj", "phantom"},        {"scan_full.spj", "scan"},       {"scan_mean.spj", "scan"},
      {"scatter_true.spj", "scan"},    {"system.json", "system"}};

  stage_phantom(config);
  stage_simulate(config);
  stage_recon(config, Regime::Full, 1);
  artifacts.push_back({recon_name(Regime::Full, 1), "reconstruction"});
  artifacts.push_back({"recon_full_iter.csv", "recon_log"});
  for (int df : config.dfs) {
    artifacts.push_back({scan_name(df), "scan"});
    bool const sparse = !split_views(config.geometry(), df).skipped.empty();
    if (sparse) {
      stage_train(config, df);
      stage_synthesize(config, df);
      stage_interp(config, df);
      artifacts.push_back({model_name(df), "model"});
      artifacts.push_back({"train" + df_suffix(df) + ".csv", "train_log"});
      artifacts.push_back({synth_name(Regime::Field, df), "synthesized"});
      artifacts.push_back({synth_name(Regime::LinInt, df), "synthesized"});
      artifacts.push_back({"profile" + df_suffix(df) + ".csv", "profile"});
    }
    for (Regime r : kSparseRegimes) {
      if (!sparse && r != Regime::Partial) continue;
      stage_recon(config, r, df);
      std::string const name = recon_name(r, df);
      artifacts.push_back({name, "reconstruction"});
      artifacts.push_back({name.substr(0, name.size() - 4) + "_iter.csv", "recon_log"});
    }
  }
  stage_evaluate(config);
  artifacts.push_back({"metrics.csv", "metrics_csv"});
  artifacts.push_back({"metrics.json", "metrics_json"});

  std::sort(artifacts.begin(), artifacts.end());
  json manifest{{"seed", config.seed}, {"artifacts", json::array()}};
  for (auto const& [name, kind] : artifacts)
    manifest["artifacts"].push_back({{"path", name}, {"kind", kind}, {"sha256", sha256_file(config.out_dir / name)}});
  write_text(config.out_dir / "manifest.json", manifest.dump(2));
  return manifest;
}

}  // namespace spect

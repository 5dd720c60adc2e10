#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spect/field.hpp"
#include "spect/geometry.hpp"
#include "spect/interp.hpp"
#include "spect/phantom.hpp"
#include "spect/projector.hpp"
#include "spect/recon.hpp"
#include "spect/simulate.hpp"

namespace spect {

struct ExperimentConfig {
  PhantomSpec phantom = PhantomSpec::standard();
  int n_views = 120;
  Orbit orbit = EllipticalOrbit{200.0, 160.0, 0.0};
  int det_nu = 128;
  int det_nv = 128;
  double det_pixel_mm = 4.8;
  double psf_sigma0_mm = 1.5;
  double psf_slope = 0.03;
  double count_target = 2e6;
  ScatterParams scatter;
  std::vector<int> dfs{2, 4, 8};
  TrainConfig train;
  ReconConfig recon;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  void validate() const;
  ScanGeometry geometry() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Missing keys keep their defaults. A "phantom_spec" string is read as a
/// path (relative to base_dir) to a phantom JSON document.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Per-DF training seed derived from the experiment seed.
std::uint64_t train_seed(const ExperimentConfig& config, int df);

// Stages read their inputs from and write their outputs to config.out_dir.
void stage_phantom(const ExperimentConfig& config);
void stage_simulate(const ExperimentConfig& config);
void stage_train(const ExperimentConfig& config, int df);
void stage_synthesize(const ExperimentConfig& config, int df);
void stage_interp(const ExperimentConfig& config, int df);
/// Full reconstruction when regime is Full (df ignored), else the sparse regime at df.
void stage_recon(const ExperimentConfig& config, Regime regime, int df);
void stage_evaluate(const ExperimentConfig& config);

/// Runs every stage, writes manifest.json and returns it. Each manifest
/// entry carries path, kind and SHA-256 of an artifact.
nlohmann::json run_pipeline(const ExperimentConfig& config);

std::string sha256_file(const std::filesystem::path& path);

/// Artifact file names.
std::string scan_name(int df);
std::string model_name(int df);
std::string synth_name(Regime regime, int df);
std::string recon_name(Regime regime, int df);

}  // namespace spect

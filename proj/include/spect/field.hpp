#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spect/geometry.hpp"
#include "spect/mlp.hpp"
#include "spect/optim.hpp"
#include "spect/projection.hpp"

namespace spect {

/// Input encoding of a CoordinateSample. Raw feeds (u, v, sin, cos, r);
/// Fourier appends sin/cos(2^k pi u) and sin/cos(2^k pi v), k < n_frequencies.
struct Encoding {
  enum class Kind { Raw, Fourier };
  Kind kind = Kind::Raw;
  int n_frequencies = 0;

  int width() const { return kind == Kind::Raw ? 5 : 5 + 4 * n_frequencies; }
};

struct FieldArchitecture {
  int hidden_layers = 12;
  int hidden_width = 256;
  Activation activation = Activation::Relu;
  Encoding encoding;
};

/// Coordinate network mapping a detector sample to expected counts in every
/// energy window.
struct FieldModel {
  FieldArchitecture arch;
  Mlp<float> net;
  std::uint64_t seed = 0;

  static FieldModel create(const FieldArchitecture& arch, int n_outputs, std::uint64_t seed);
  int n_outputs() const { return net.n_outputs(); }
};

Eigen::MatrixXf encode_batch(const Encoding& encoding, std::span<const CoordinateSample> samples);

/// Network outputs (n_outputs x samples). Throws NumericFailure on non-finite weights.
Eigen::MatrixXf evaluate_field(const FieldModel& model, std::span<const CoordinateSample> samples);

template <typename T>
struct BatchGradient {
  double loss = 0.0;
  std::vector<T> grad;
};

/// Mean Huber loss of net(inputs) against targets and its parameter gradient.
/// The batch is cut into fixed chunks evaluated in parallel; chunk gradients
/// are summed in chunk order.
template <typename T>
BatchGradient<T> huber_batch_gradient(const Mlp<T>& net,
                                      const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& inputs,
                                      const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& targets,
                                      double delta);

struct TrainConfig {
  double lr = 1e-3;
  int batch = 10000;
  int epochs = 200;
  double huber_delta = 1.0;
  double val_fraction = 0.2;
  PlateauConfig plateau;
  AdamConfig adam;
  std::uint64_t seed = 0;
  FieldArchitecture arch;
  int upsample = 2;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const FieldArchitecture& a);
void from_json(const nlohmann::json& j, FieldArchitecture& a);

/// Coordinates and per-window targets of all measured pixels, views in
/// ascending index order, each view nearest-neighbour upsampled.
struct TrainingSet {
  std::vector<CoordinateSample> coords;
  Eigen::MatrixXf targets;  // n_windows x coords.size()
  std::vector<int> views;
};

TrainingSet prepare_targets(const ProjectionStack& measured, int upsample = 2);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  FieldModel model;
  TrainReport report;
};

/// Fits a field to the measured views. A seeded shuffle holds out
/// val_fraction of all pixels; the returned model is the snapshot with the
/// lowest validation loss.
TrainResult train(const ProjectionStack& measured, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Evaluates the field on each view's upsampled grid, averages back to the
/// detector grid and clamps at zero.
ProjectionStack synthesize(const FieldModel& model, const ScanGeometry& geometry,
                           std::span<const int> views, int upsample = 2);

}  // namespace spect

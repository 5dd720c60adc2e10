#include "spect/field.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "spect/error.hpp"

namespace spect {

namespace {

constexpr Eigen::Index kChunk = 1024;

std::string encoding_name(Encoding::Kind k) { return k == Encoding::Kind::Raw ? "raw" : "fourier"; }

}  // namespace

FieldModel FieldModel::create(const FieldArchitecture& arch, int n_outputs, std::uint64_t seed) {
  if (arch.hidden_layers < 1 || arch.hidden_width < 1)
    throw std::invalid_argument("FieldModel: need at least one hidden layer of positive width");
  if (arch.encoding.kind == Encoding::Kind::Fourier && arch.encoding.n_frequencies < 1)
    throw std::invalid_argument("FieldModel: fourier encoding needs n_frequencies >= 1");
  std::vector<int> widths{arch.encoding.width()};
  for (int l = 0; l < arch.hidden_layers; ++l) widths.push_back(arch.hidden_width);
  widths.push_back(n_outputs);
  FieldModel m{arch, Mlp<float>(widths, arch.activation), seed};
  m.net.initialize(seed);
  return m;
}

Eigen::MatrixXf encode_batch(const Encoding& encoding, std::span<const CoordinateSample> samples) {
  Eigen::MatrixXf x(encoding.width(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto const& s = samples[i];
    auto col = x.col(static_cast<Eigen::Index>(i));
    col(0) = s.u;
    col(1) = s.v;
    col(2) = s.sin_theta;
    col(3) = s.cos_theta;
    col(4) = s.r;
    for (int k = 0; k < (encoding.kind == Encoding::Kind::Fourier ? encoding.n_frequencies : 0); ++k) {
      double const f = std::ldexp(std::numbers::pi, k);
      col(5 + 4 * k) = static_cast<float>(std::sin(f * s.u));
      col(6 + 4 * k) = static_cast<float>(std::cos(f * s.u));
      col(7 + 4 * k) = static_cast<float>(std::sin(f * s.v));
      col(8 + 4 * k) = static_cast<float>(std::cos(f * s.v));
    }
  }
  return x;
}

Eigen::MatrixXf evaluate_field(const FieldModel& model, std::span<const CoordinateSample> samples) {
  if (!model.net.finite()) throw NumericFailure("field: non-finite weights");
  Eigen::Index const n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXf out(model.n_outputs(), n);
  Eigen::Index const n_chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index c = 0; c < n_chunks; ++c) {
    Eigen::Index const begin = c * kChunk;
    Eigen::Index const len = std::min(kChunk, n - begin);
    auto const x = encode_batch(model.arch.encoding, samples.subspan(begin, len));
    out.middleCols(begin, len) = model.net.forward(x);
  }
  return out;
}

template <typename T>
BatchGradient<T> huber_batch_gradient(const Mlp<T>& net,
                                      const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& inputs,
                                      const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& targets,
                                      double delta) {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  if (inputs.cols() != targets.cols() || targets.rows() != net.n_outputs())
    throw std::invalid_argument("huber_batch_gradient: shape mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("huber_batch_gradient: delta must be positive");
  Eigen::Index const n = inputs.cols();
  BatchGradient<T> out;
  out.grad.assign(net.n_parameters(), T(0));
  if (n == 0) return out;
  double const n_elements = static_cast<double>(n) * net.n_outputs();
  Eigen::Index const n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<T>> grads(n_chunks);
  std::vector<double> losses(n_chunks, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index c = 0; c < n_chunks; ++c) {
    Eigen::Index const begin = c * kChunk;
    Eigen::Index const len = std::min(kChunk, n - begin);
    typename Mlp<T>::Cache cache;
    Matrix const pred = net.forward(inputs.middleCols(begin, len), &cache);
    Matrix dy(pred.rows(), pred.cols());
    double loss = 0.0;
    for (Eigen::Index j = 0; j < len; ++j)
      for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        double const a = static_cast<double>(pred(r, j)) - static_cast<double>(targets(r, begin + j));
        loss += huber_value(a, delta);
        dy(r, j) = static_cast<T>(huber_derivative(a, delta) / n_elements);
      }
    losses[c] = loss;
    grads[c].assign(net.n_parameters(), T(0));
    net.backward(cache, dy, grads[c]);
  }
  double total = 0.0;
  for (Eigen::Index c = 0; c < n_chunks; ++c) {
    total += losses[c];
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += grads[c][i];
  }
  out.loss = total / n_elements;
  return out;
}

template BatchGradient<float> huber_batch_gradient(const Mlp<float>&, const Eigen::MatrixXf&,
                                                   const Eigen::MatrixXf&, double);
template BatchGradient<double> huber_batch_gradient(const Mlp<double>&, const Eigen::MatrixXd&,
                                                    const Eigen::MatrixXd&, double);

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(huber_delta > 0.0)) throw std::invalid_argument("TrainConfig: huber_delta must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("TrainConfig: val_fraction must lie in (0, 1)");
  if (upsample < 1) throw std::invalid_argument("TrainConfig: upsample must be >= 1");
  if (plateau.patience < 1 || !(plateau.factor > 0.0 && plateau.factor <= 1.0))
    throw std::invalid_argument("TrainConfig: invalid plateau settings");
}

void to_json(nlohmann::json& j, const FieldArchitecture& a) {
  j = nlohmann::json{{"hidden_layers", a.hidden_layers},
                     {"hidden_width", a.hidden_width},
                     {"activation", to_string(a.activation)},
                     {"encoding", encoding_name(a.encoding.kind)},
                     {"n_frequencies", a.encoding.n_frequencies}};
}

void from_json(const nlohmann::json& j, FieldArchitecture& a) {
  a = FieldArchitecture{};
  a.hidden_layers = j.value("hidden_layers", a.hidden_layers);
  a.hidden_width = j.value("hidden_width", a.hidden_width);
  a.activation = activation_from_string(j.value("activation", std::string("relu")));
  std::string const enc = j.value("encoding", std::string("raw"));
  if (enc == "raw")
    a.encoding.kind = Encoding::Kind::Raw;
  else if (enc == "fourier")
    a.encoding.kind = Encoding::Kind::Fourier;
  else
    throw std::invalid_argument("unknown encoding '" + enc + "'");
  a.encoding.n_frequencies = j.value("n_frequencies", 0);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"batch", c.batch},
                     {"epochs", c.epochs},
                     {"huber_delta", c.huber_delta},
                     {"val_fraction", c.val_fraction},
                     {"plateau", {{"factor", c.plateau.factor},
                                  {"patience", c.plateau.patience},
                                  {"min_lr", c.plateau.min_lr},
                                  {"threshold", c.plateau.threshold}}},
                     {"seed", c.seed},
                     {"arch", c.arch},
                     {"upsample", c.upsample}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.lr = j.value("lr", c.lr);
  c.batch = j.value("batch", c.batch);
  c.epochs = j.value("epochs", c.epochs);
  c.huber_delta = j.value("huber_delta", c.huber_delta);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  if (j.contains("plateau")) {
    auto const& p = j.at("plateau");
    c.plateau.factor = p.value("factor", c.plateau.factor);
    c.plateau.patience = p.value("patience", c.plateau.patience);
    c.plateau.min_lr = p.value("min_lr", c.plateau.min_lr);
    c.plateau.threshold = p.value("threshold", c.plateau.threshold);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("arch")) j.at("arch").get_to(c.arch);
  c.upsample = j.value("upsample", c.upsample);
}

TrainingSet prepare_targets(const ProjectionStack& measured, int upsample) {
  if (measured.n_slots() == 0) throw std::invalid_argument("prepare_targets: empty stack");
  if (upsample < 1) throw std::invalid_argument("prepare_targets: upsample must be >= 1");
  auto const& g = measured.geometry;
  TrainingSet set;
  set.views = measured.views;
  std::sort(set.views.begin(), set.views.end());

  int const nu = g.det_nu * upsample;
  int const nv = g.det_nv * upsample;
  std::size_t const per_view = static_cast<std::size_t>(nu) * nv;
  set.coords.reserve(per_view * set.views.size());
  set.targets.resize(measured.n_windows, static_cast<Eigen::Index>(per_view * set.views.size()));
  Eigen::Index col = 0;
  for (int v : set.views) {
    auto grid = coordinate_grid(g, v, upsample);
    set.coords.insert(set.coords.end(), grid.begin(), grid.end());
    int const slot = measured.slot_of(v);
    for (int row = 0; row < nv; ++row)
      for (int c = 0; c < nu; ++c, ++col) {
        std::size_t const src = static_cast<std::size_t>(row / upsample) * g.det_nu + c / upsample;
        for (int w = 0; w < measured.n_windows; ++w) set.targets(w, col) = measured.view(w, slot)[src];
      }
  }
  return set;
}

TrainResult train(const ProjectionStack& measured, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (measured.n_slots() < 2) throw std::invalid_argument("train: need at least 2 measured views");
  auto const t0 = std::chrono::steady_clock::now();

  TrainingSet const set = prepare_targets(measured, config.upsample);
  std::size_t const n = set.coords.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t const n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> trn(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());

  auto gather = [&](std::span<const std::size_t> idx, Eigen::MatrixXf& x, Eigen::MatrixXf& y) {
    std::vector<CoordinateSample> cs(idx.size());
    y.resize(set.targets.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      cs[k] = set.coords[idx[k]];
      y.col(static_cast<Eigen::Index>(k)) = set.targets.col(static_cast<Eigen::Index>(idx[k]));
    }
    x = encode_batch(config.arch.encoding, cs);
  };

  Eigen::MatrixXf val_x, val_y;
  gather(val, val_x, val_y);

  TrainResult result{FieldModel::create(config.arch, measured.n_windows, config.seed), {}};
  FieldModel& model = result.model;
  std::vector<float> best_params(model.net.parameters().begin(), model.net.parameters().end());
  AdamState<float> adam(model.net.n_parameters());
  PlateauScheduler scheduler(config.plateau);
  double lr = config.lr;
  double best_val = std::numeric_limits<double>::infinity();

  Eigen::MatrixXf bx, by;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(trn.begin(), trn.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < trn.size(); b += static_cast<std::size_t>(config.batch)) {
      std::size_t const len = std::min<std::size_t>(config.batch, trn.size() - b);
      gather(std::span(trn).subspan(b, len), bx, by);
      auto const g = huber_batch_gradient(model.net, bx, by, config.huber_delta);
      if (!std::isfinite(g.loss))
        throw NumericFailure("train: non-finite loss at epoch " + std::to_string(epoch));
      adam_step<float>(model.net.parameters(), g.grad, adam, lr, config.adam);
      loss_sum += g.loss * static_cast<double>(len);
    }

    Eigen::MatrixXf const pred = [&] {
      Eigen::MatrixXf p(val_y.rows(), val_y.cols());
      Eigen::Index const nv = val_x.cols();
      Eigen::Index const n_chunks = (nv + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic)
      for (Eigen::Index c = 0; c < n_chunks; ++c) {
        Eigen::Index const begin = c * kChunk;
        Eigen::Index const len = std::min(kChunk, nv - begin);
        p.middleCols(begin, len) = model.net.forward(val_x.middleCols(begin, len));
      }
      return p;
    }();
    double val_loss = 0.0;
    for (Eigen::Index k = 0; k < pred.size(); ++k)
      val_loss += huber_value(static_cast<double>(pred.data()[k]) - val_y.data()[k], config.huber_delta);
    val_loss /= static_cast<double>(pred.size());
    if (!std::isfinite(val_loss))
      throw NumericFailure("train: non-finite validation loss at epoch " + std::to_string(epoch));

    EpochRecord rec{epoch, loss_sum / static_cast<double>(trn.size()), val_loss, lr};
    result.report.epochs.push_back(rec);
    if (val_loss < best_val) {
      best_val = val_loss;
      result.report.best_epoch = epoch;
      std::copy(model.net.parameters().begin(), model.net.parameters().end(), best_params.begin());
    }
    if (on_epoch) on_epoch(rec);
    lr = scheduler.step(lr, val_loss);
  }

  std::copy(best_params.begin(), best_params.end(), model.net.parameters().begin());
  result.report.best_val_loss = best_val;
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

ProjectionStack synthesize(const FieldModel& model, const ScanGeometry& geometry,
                           std::span<const int> views, int upsample) {
  ProjectionStack out(geometry, {views.begin(), views.end()}, model.n_outputs(),
                      ProjectionKind::Synthesized);
  int const nu = geometry.det_nu * upsample;
  double const inv = 1.0 / (upsample * upsample);
  for (std::size_t s = 0; s < views.size(); ++s) {
    auto const grid = coordinate_grid(geometry, views[s], upsample);
    Eigen::MatrixXf const values = evaluate_field(model, grid);
    for (int w = 0; w < model.n_outputs(); ++w) {
      auto dst = out.view(w, static_cast<int>(s));
      for (int row = 0; row < geometry.det_nv; ++row)
        for (int col = 0; col < geometry.det_nu; ++col) {
          double acc = 0.0;
          for (int dy = 0; dy < upsample; ++dy)
            for (int dx = 0; dx < upsample; ++dx)
              acc += values(w, static_cast<Eigen::Index>(row * upsample + dy) * nu + col * upsample + dx);
          dst[static_cast<std::size_t>(row) * geometry.det_nu + col] = std::max(0.0f, static_cast<float>(acc * inv));
        }
    }
  }
  return out;
}

}  // namespace spect

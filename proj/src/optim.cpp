#include "spect/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spect {

template <typename T>
HuberResult<T> huber_loss(std::span<const T> pred, std::span<const T> target, double delta) {
  if (pred.size() != target.size()) throw std::invalid_argument("huber_loss: length mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("huber_loss: delta must be positive");
  HuberResult<T> out;
  out.gradient.resize(pred.size());
  if (pred.empty()) return out;
  double const n = static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double const a = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sum += huber_value(a, delta);
    out.gradient[i] = static_cast<T>(huber_derivative(a, delta) / n);
  }
  out.loss = sum / n;
  return out;
}

template HuberResult<float> huber_loss(std::span<const float>, std::span<const float>, double);
template HuberResult<double> huber_loss(std::span<const double>, std::span<const double>, double);

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr,
               const AdamConfig& config) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: state shapes do not match parameters");
  ++state.step;
  double const c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  double const c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  T const b1 = static_cast<T>(config.beta1);
  T const b2 = static_cast<T>(config.beta2);
  T const step = static_cast<T>(lr / c1);
  T const root_c2 = static_cast<T>(std::sqrt(c2));
  T const eps = static_cast<T>(config.eps);
  std::size_t const n = params.size();
  T* p = params.data();
  T const* g = grads.data();
  T* m = state.m.data();
  T* v = state.v.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    p[i] -= step * m[i] / (std::sqrt(v[i]) / root_c2 + eps);
  }
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, double, const AdamConfig&);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&, double, const AdamConfig&);

double PlateauScheduler::step(double lr, double val_loss) {
  if (!(lr > 0.0)) throw std::invalid_argument("PlateauScheduler: lr must be positive");
  if (val_loss < best_ * (1.0 - config_.threshold) || best_ == std::numeric_limits<double>::infinity()) {
    best_ = val_loss;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ >= config_.patience) {
    bad_epochs_ = 0;
    return std::max(lr * config_.factor, std::min(config_.min_lr, lr));
  }
  return lr;
}

}  // namespace spect

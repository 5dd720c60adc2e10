#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace spect {

template <typename T>
struct HuberResult {
  double loss = 0.0;
  std::vector<T> gradient;
};

/// Mean Huber loss over all elements, a = pred - target:
/// a^2/2 for |a| < delta, delta*(|a| - delta/2) otherwise.
/// Gradient wrt pred is clamp(a, -delta, delta) / n.
template <typename T>
HuberResult<T> huber_loss(std::span<const T> pred, std::span<const T> target, double delta);

/// Per-element Huber value and derivative (unnormalized).
inline double huber_value(double a, double delta) {
  double const m = a < 0 ? -a : a;
  return m < delta ? 0.5 * a * a : delta * (m - 0.5 * delta);
}
inline double huber_derivative(double a, double delta) {
  return a > delta ? delta : (a < -delta ? -delta : a);
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

/// Bias-corrected Adam update in place.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr,
               const AdamConfig& config = {});

struct PlateauConfig {
  double factor = 0.5;
  int patience = 10;
  double min_lr = 1e-5;
  /// Relative improvement needed to reset the patience counter.
  double threshold = 1e-6;
};

/// Reduce-on-plateau: after `patience` consecutive non-improving epochs the
/// rate becomes max(lr * factor, min_lr) and the counter restarts.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(PlateauConfig config = {}) : config_(config) {}

  double step(double lr, double val_loss);

  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }

 private:
  PlateauConfig config_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace spect

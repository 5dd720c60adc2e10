#include "spect/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace spect {

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

template <typename T>
Mlp<T>::Mlp(std::vector<int> widths, Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need input and output widths");
  for (int w : widths_)
    if (w < 1) throw std::invalid_argument("Mlp: layer widths must be positive");
  std::size_t total = 0;
  for (int l = 0; l < n_layers(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, T(0));
}

template <typename T>
typename Mlp<T>::MatrixMap Mlp<T>::weight(int l) {
  return MatrixMap(params_.data() + offsets_[l], widths_[l + 1], widths_[l]);
}
template <typename T>
typename Mlp<T>::ConstMatrixMap Mlp<T>::weight(int l) const {
  return ConstMatrixMap(params_.data() + offsets_[l], widths_[l + 1], widths_[l]);
}
template <typename T>
typename Mlp<T>::VectorMap Mlp<T>::bias(int l) {
  return VectorMap(params_.data() + bias_offset(l), widths_[l + 1]);
}
template <typename T>
typename Mlp<T>::ConstVectorMap Mlp<T>::bias(int l) const {
  return ConstVectorMap(params_.data() + bias_offset(l), widths_[l + 1]);
}

template <typename T>
void Mlp<T>::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int l = 0; l < n_layers(); ++l) {
    double const bound = std::sqrt(6.0 / widths_[l]);
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<T>(dist(rng));
    bias(l).setZero();
  }
}

template <typename T>
bool Mlp<T>::finite() const {
  for (T p : params_)
    if (!std::isfinite(p)) return false;
  return true;
}

template <typename T>
typename Mlp<T>::Matrix Mlp<T>::forward(const Matrix& inputs, Cache* cache) const {
  if (inputs.rows() != n_inputs()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  if (cache) {
    cache->activations.resize(n_layers() + 1);
    cache->activations[0] = inputs;
  }
  Matrix a = inputs;
  for (int l = 0; l < n_layers(); ++l) {
    Matrix z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < n_layers()) {
      if (activation_ == Activation::Relu)
        z = z.cwiseMax(T(0));
      else
        z = z.array().tanh().matrix();
    }
    a = std::move(z);
    if (cache) cache->activations[l + 1] = a;
  }
  return a;
}

template <typename T>
void Mlp<T>::backward(const Cache& cache, const Matrix& output_grad, std::span<T> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: gradient size mismatch");
  if (static_cast<int>(cache.activations.size()) != n_layers() + 1 ||
      output_grad.rows() != n_outputs() || output_grad.cols() != cache.activations[0].cols())
    throw std::invalid_argument("Mlp::backward: cache/gradient shape mismatch");
  Matrix delta = output_grad;
  for (int l = n_layers() - 1; l >= 0; --l) {
    auto const& a_prev = cache.activations[l];
    MatrixMap gw(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
    VectorMap gb(grad.data() + bias_offset(l), widths_[l + 1]);
    gw.noalias() += delta * a_prev.transpose();
    // Eigen sums vectorized rows and the unaligned scalar head in different
    // orders; reducing into an aligned temporary keeps the result independent
    // of where the gradient buffer happens to sit.
    Vector const db = delta.rowwise().sum();
    gb += db;
    if (l == 0) break;
    Matrix back = weight(l).transpose() * delta;
    if (activation_ == Activation::Relu)
      delta = (a_prev.array() > T(0)).select(back, T(0));
    else
      delta = (back.array() * (T(1) - a_prev.array().square())).matrix();
  }
}

namespace reference {

template <typename T>
static T act(Activation a, T z) {
  return a == Activation::Relu ? (z > T(0) ? z : T(0)) : std::tanh(z);
}

template <typename T>
static T act_derivative(Activation a, T post) {
  return a == Activation::Relu ? (post > T(0) ? T(1) : T(0)) : T(1) - post * post;
}

template <typename T>
static std::vector<std::vector<T>> layer_outputs(const Mlp<T>& net, std::span<const T> input) {
  auto const& w = net.widths();
  auto const p = net.parameters();
  std::vector<std::vector<T>> outs{{input.begin(), input.end()}};
  for (int l = 0; l < net.n_layers(); ++l) {
    T const* W = p.data() + net.weight_offset(l);
    T const* b = p.data() + net.bias_offset(l);
    std::vector<T> next(w[l + 1]);
    for (int r = 0; r < w[l + 1]; ++r) {
      T z = b[r];
      for (int c = 0; c < w[l]; ++c) z += W[static_cast<std::size_t>(c) * w[l + 1] + r] * outs.back()[c];
      next[r] = (l + 1 < net.n_layers()) ? act(net.activation(), z) : z;
    }
    outs.push_back(std::move(next));
  }
  return outs;
}

template <typename T>
std::vector<T> mlp_forward(const Mlp<T>& net, std::span<const T> input) {
  return layer_outputs(net, input).back();
}

template <typename T>
std::vector<T> mlp_backward(const Mlp<T>& net, std::span<const T> input,
                            std::span<const T> output_grad) {
  auto const& w = net.widths();
  auto const p = net.parameters();
  auto const outs = layer_outputs(net, input);
  std::vector<T> grad(net.n_parameters(), T(0));
  std::vector<T> delta(output_grad.begin(), output_grad.end());
  for (int l = net.n_layers() - 1; l >= 0; --l) {
    T const* W = p.data() + net.weight_offset(l);
    T* gW = grad.data() + net.weight_offset(l);
    T* gb = grad.data() + net.bias_offset(l);
    for (int r = 0; r < w[l + 1]; ++r) {
      gb[r] += delta[r];
      for (int c = 0; c < w[l]; ++c) gW[static_cast<std::size_t>(c) * w[l + 1] + r] += delta[r] * outs[l][c];
    }
    if (l == 0) break;
    std::vector<T> prev(w[l], T(0));
    for (int c = 0; c < w[l]; ++c) {
      T s = 0;
      for (int r = 0; r < w[l + 1]; ++r) s += W[static_cast<std::size_t>(c) * w[l + 1] + r] * delta[r];
      prev[c] = s * act_derivative(net.activation(), outs[l][c]);
    }
    delta = std::move(prev);
  }
  return grad;
}

template std::vector<float> mlp_forward(const Mlp<float>&, std::span<const float>);
template std::vector<double> mlp_forward(const Mlp<double>&, std::span<const double>);
template std::vector<float> mlp_backward(const Mlp<float>&, std::span<const float>, std::span<const float>);
template std::vector<double> mlp_backward(const Mlp<double>&, std::span<const double>, std::span<const double>);

}  // namespace reference

template class Mlp<float>;
template class Mlp<double>;

}  // namespace spect

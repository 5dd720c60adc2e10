#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spect {

enum class Activation { Relu, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected network: affine + activation on every hidden layer, affine
/// output. Parameters live in one flat buffer, layer by layer: W (out x in,
/// column-major) then b (out). Batches are matrices with one sample per column.
template <typename T>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  /// Post-activation outputs of every layer; entry 0 is the input batch.
  struct Cache {
    std::vector<Matrix> activations;
  };

  Mlp() = default;
  Mlp(std::vector<int> widths, Activation activation);

  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  int n_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int n_inputs() const { return widths_.front(); }
  int n_outputs() const { return widths_.back(); }
  std::size_t n_parameters() const { return params_.size(); }

  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }

  MatrixMap weight(int layer);
  ConstMatrixMap weight(int layer) const;
  VectorMap bias(int layer);
  ConstVectorMap bias(int layer) const;

  /// Uniform weights with variance 2/fan_in, zero biases.
  void initialize(std::uint64_t seed);

  bool finite() const;

  /// Outputs for a batch; fills `cache` when non-null.
  Matrix forward(const Matrix& inputs, Cache* cache = nullptr) const;

  /// Accumulates d(loss)/d(parameters) into grad given d(loss)/d(outputs).
  void backward(const Cache& cache, const Matrix& output_grad, std::span<T> grad) const;

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
  }

 private:
  std::vector<int> widths_;
  Activation activation_ = Activation::Relu;
  std::vector<std::size_t> offsets_;
  std::vector<T> params_;
};

/// Per-sample scalar-loop evaluation of the same network. Test/bench only.
namespace reference {
template <typename T>
std::vector<T> mlp_forward(const Mlp<T>& net, std::span<const T> input);
/// Gradient of sum_k output_grad[k] * output[k] for a single sample.
template <typename T>
std::vector<T> mlp_backward(const Mlp<T>& net, std::span<const T> input,
                            std::span<const T> output_grad);
}  // namespace reference

extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace spect

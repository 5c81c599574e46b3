#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcache/core/matrix.hpp"
#include "vcache/core/rng.hpp"

namespace vcache::rl {

/// Activation of the last layer. Hidden layers are always ReLU.
enum class OutputActivation {
  squash,  // (tanh(z) + 1) / 2, range (0, 1)
  linear,
};

struct DenseLayer {
  Matrix<double> weights;  // out x in
  std::vector<double> bias;

  std::size_t inputs() const { return weights.cols(); }
  std::size_t outputs() const { return weights.rows(); }
};

/// Gradients with the same shapes as the layers of an Mlp.
struct MlpGradients {
  std::vector<Matrix<double>> weights;
  std::vector<std::vector<double>> bias;

  void zero();
};

/// Fully connected network with manual backpropagation.
class Mlp {
 public:
  /// Values cached by forward() for a later backward().
  struct Tape {
    std::vector<Matrix<double>> inputs;  // input of each layer
    std::vector<Matrix<double>> pre;     // pre-activation of each layer
    Matrix<double> output;
  };

  Mlp() = default;
  /// `sizes` lists input, hidden..., output widths. Hidden and output layers
  /// start uniform in +-1/sqrt(fan_in); the last layer in +-final_scale.
  Mlp(const std::vector<std::size_t>& sizes, OutputActivation out, Rng& rng,
      double final_scale = 3e-3);

  std::size_t input_size() const;
  std::size_t output_size() const;
  OutputActivation output_activation() const { return activation_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// x is batch x input_size; returns batch x output_size.
  Matrix<double> forward(const Matrix<double>& x, Tape* tape = nullptr) const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Backpropagates d(loss)/d(output). Gradients are accumulated into
  /// `grads`; the return value is d(loss)/d(input).
  Matrix<double> backward(const Tape& tape, const Matrix<double>& d_output,
                          MlpGradients& grads) const;

  MlpGradients zero_gradients() const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);
  /// Flattens gradients in the same order as parameters().
  static std::vector<double> flatten(const MlpGradients& grads);

  /// this = weight * source + (1 - weight) * this, parameter-wise.
  void blend_from(const Mlp& source, double weight);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& doc);

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.activation_ == b.activation_ && a.parameters() == b.parameters() &&
           a.layers_.size() == b.layers_.size();
  }

 private:
  std::vector<DenseLayer> layers_;
  OutputActivation activation_ = OutputActivation::linear;
};

}  // namespace vcache::rl

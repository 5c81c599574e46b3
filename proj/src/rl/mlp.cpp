#include "vcache/rl/mlp.hpp"

#include <cmath>

#include "vcache/core/error.hpp"
#include "vcache/rl/kernels.hpp"

namespace vcache::rl {

void MlpGradients::zero() {
  for (auto& w : weights) w.fill(0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

Mlp::Mlp(const std::vector<std::size_t>& sizes, OutputActivation out, Rng& rng,
         double final_scale)
    : activation_(out) {
  if (sizes.size() < 2) throw InvalidArgument("an Mlp needs at least input and output sizes");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t fan_in = sizes[l];
    const std::size_t fan_out = sizes[l + 1];
    if (fan_in == 0 || fan_out == 0) throw InvalidArgument("zero-width layer");
    const bool last = l + 2 == sizes.size();
    const double scale = last ? final_scale : 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer{Matrix<double>(fan_out, fan_in), std::vector<double>(fan_out)};
    for (double& w : layer.weights.flat()) w = rng.uniform(-scale, scale);
    for (double& b : layer.bias) b = rng.uniform(-scale, scale);
    layers_.push_back(std::move(layer));
  }
}

std::size_t Mlp::input_size() const { return layers_.empty() ? 0 : layers_.front().inputs(); }
std::size_t Mlp::output_size() const { return layers_.empty() ? 0 : layers_.back().outputs(); }

Matrix<double> Mlp::forward(const Matrix<double>& x, Tape* tape) const {
  if (x.cols() != input_size()) throw InvalidArgument("Mlp input width mismatch");
  const std::size_t batch = x.rows();
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix<double> current = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    Matrix<double> z(batch, layer.outputs());
    kernels::dense_forward(current.data(), batch, layer.inputs(), layer.weights.data(),
                           layer.bias.data(), layer.outputs(), z.data());
    Matrix<double> a = z;
    const bool last = l + 1 == layers_.size();
    if (!last) {
      for (double& v : a.flat()) v = v > 0.0 ? v : 0.0;
    } else if (activation_ == OutputActivation::squash) {
      for (double& v : a.flat()) v = 0.5 * (std::tanh(v) + 1.0);
    }
    if (tape) {
      tape->inputs.push_back(std::move(current));
      tape->pre.push_back(std::move(z));
    }
    current = std::move(a);
  }
  if (tape) tape->output = current;
  return current;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Matrix<double> in(1, x.size());
  std::copy(x.begin(), x.end(), in.flat().begin());
  const Matrix<double> out = forward(in);
  return {out.flat().begin(), out.flat().end()};
}

Matrix<double> Mlp::backward(const Tape& tape, const Matrix<double>& d_output,
                             MlpGradients& grads) const {
  if (tape.pre.size() != layers_.size()) throw InvalidArgument("tape does not match network");
  const std::size_t batch = d_output.rows();
  Matrix<double> delta = d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    const Matrix<double>& z = tape.pre[l];
    const bool last = l + 1 == layers_.size();
    // Turn d(loss)/d(activation) into d(loss)/d(pre-activation).
    if (!last) {
      for (std::size_t k = 0; k < delta.size(); ++k) {
        if (!(z.flat()[k] > 0.0)) delta.flat()[k] = 0.0;
      }
    } else if (activation_ == OutputActivation::squash) {
      for (std::size_t k = 0; k < delta.size(); ++k) {
        const double t = std::tanh(z.flat()[k]);
        delta.flat()[k] *= 0.5 * (1.0 - t * t);
      }
    }
    kernels::dense_backward_params(delta.data(), batch, layer.outputs(), tape.inputs[l].data(),
                                   layer.inputs(), grads.weights[l].data(), grads.bias[l].data());
    Matrix<double> d_in(batch, layer.inputs());
    kernels::dense_backward_input(delta.data(), batch, layer.outputs(), layer.weights.data(),
                                  layer.inputs(), d_in.data());
    delta = std::move(d_in);
  }
  return delta;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (const auto& layer : layers_) {
    g.weights.emplace_back(layer.outputs(), layer.inputs(), 0.0);
    g.bias.emplace_back(layer.outputs(), 0.0);
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.weights.flat().begin(), layer.weights.flat().end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

void Mlp::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw InvalidArgument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& layer : layers_) {
    for (double& w : layer.weights.flat()) w = values[k++];
    for (double& b : layer.bias) b = values[k++];
  }
}

std::vector<double> Mlp::flatten(const MlpGradients& grads) {
  std::vector<double> out;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    out.insert(out.end(), grads.weights[l].flat().begin(), grads.weights[l].flat().end());
    out.insert(out.end(), grads.bias[l].begin(), grads.bias[l].end());
  }
  return out;
}

void Mlp::blend_from(const Mlp& source, double weight) {
  if (source.layers_.size() != layers_.size()) throw InvalidArgument("blend shape mismatch");
  const double keep = 1.0 - weight;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto dst_w = layers_[l].weights.flat();
    auto src_w = source.layers_[l].weights.flat();
    if (dst_w.size() != src_w.size()) throw InvalidArgument("blend shape mismatch");
    for (std::size_t k = 0; k < dst_w.size(); ++k) dst_w[k] = weight * src_w[k] + keep * dst_w[k];
    auto& dst_b = layers_[l].bias;
    const auto& src_b = source.layers_[l].bias;
    for (std::size_t k = 0; k < dst_b.size(); ++k) dst_b[k] = weight * src_b[k] + keep * dst_b[k];
  }
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json doc;
  doc["output"] = activation_ == OutputActivation::squash ? "squash" : "linear";
  doc["layers"] = nlohmann::json::array();
  for (const auto& layer : layers_) {
    nlohmann::json j;
    j["in"] = layer.inputs();
    j["out"] = layer.outputs();
    j["weights"] = std::vector<double>(layer.weights.flat().begin(), layer.weights.flat().end());
    j["bias"] = layer.bias;
    doc["layers"].push_back(std::move(j));
  }
  return doc;
}

Mlp Mlp::from_json(const nlohmann::json& doc) {
  Mlp net;
  const auto out = doc.at("output").get<std::string>();
  if (out == "squash") {
    net.activation_ = OutputActivation::squash;
  } else if (out == "linear") {
    net.activation_ = OutputActivation::linear;
  } else {
    throw ParseError("unknown output activation '" + out + "'");
  }
  for (const auto& j : doc.at("layers")) {
    const auto in = j.at("in").get<std::size_t>();
    const auto outs = j.at("out").get<std::size_t>();
    const auto w = j.at("weights").get<std::vector<double>>();
    auto b = j.at("bias").get<std::vector<double>>();
    if (w.size() != in * outs || b.size() != outs) throw ParseError("layer shape mismatch");
    DenseLayer layer{Matrix<double>(outs, in), std::move(b)};
    std::copy(w.begin(), w.end(), layer.weights.flat().begin());
    net.layers_.push_back(std::move(layer));
  }
  for (std::size_t l = 1; l < net.layers_.size(); ++l) {
    if (net.layers_[l].inputs() != net.layers_[l - 1].outputs()) {
      throw ParseError("consecutive layer widths do not chain");
    }
  }
  return net;
}

}  // namespace vcache::rl

#include "mtlchoice/linalg.hpp"

#include <cmath>
#include <string>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

LayerGradient LayerGradient::zeros_like(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
          Vector::Zero(layer.bias.size())};
}

void check_stack(std::span<const DenseLayer> layers, Index input_dim) {
  Index expected = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.weights.rows()) {
      throw ShapeError("layer " + std::to_string(l) + ": bias has " +
                           std::to_string(layer.bias.size()) + " entries, weights have " +
                           std::to_string(layer.weights.rows()) + " rows",
                       static_cast<long>(l));
    }
    if (layer.in_dim() != expected) {
      throw ShapeError("layer " + std::to_string(l) + ": expected input dimension " +
                           std::to_string(expected) + ", layer takes " +
                           std::to_string(layer.in_dim()),
                       static_cast<long>(l));
    }
    expected = layer.out_dim();
  }
}

namespace {

void apply_activation(Matrix& z, Activation activation) {
  if (activation == Activation::ReLU) z = z.cwiseMax(0.0);
}

}  // namespace

Vector forward_stack(const Vector& x, std::span<const DenseLayer> layers) {
  Matrix out = forward_stack(Matrix(x), layers);
  return out.col(0);
}

Matrix forward_stack(const Matrix& inputs, std::span<const DenseLayer> layers) {
  check_stack(layers, inputs.rows());
  Matrix current = inputs;
  for (const auto& layer : layers) {
    Matrix z = layer.weights * current;
    z.colwise() += layer.bias;
    apply_activation(z, layer.activation);
    current = std::move(z);
  }
  return current;
}

Matrix forward_cached(const Matrix& inputs, std::span<const DenseLayer> layers,
                      StackCache& cache) {
  check_stack(layers, inputs.rows());
  cache.inputs.resize(layers.size());
  cache.pre_activations.resize(layers.size());
  Matrix current = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    cache.inputs[l] = current;
    Matrix& z = cache.pre_activations[l];
    z.noalias() = layer.weights * current;
    z.colwise() += layer.bias;
    current = z;
    apply_activation(current, layer.activation);
  }
  return current;
}

Matrix backward_cached(std::span<const DenseLayer> layers, const StackCache& cache,
                       const Matrix& output_grad, std::span<LayerGradient> grads) {
  const bool accumulate = !grads.empty();
  if (accumulate && grads.size() != layers.size()) {
    throw ShapeError("gradient buffer has " + std::to_string(grads.size()) +
                     " layers, stack has " + std::to_string(layers.size()));
  }
  Matrix delta = output_grad;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    if (layer.activation == Activation::ReLU) {
      delta = delta.cwiseProduct(
          (cache.pre_activations[l].array() > 0.0).cast<double>().matrix());
    }
    if (accumulate) {
      grads[l].weights.noalias() += delta * cache.inputs[l].transpose();
      grads[l].bias += delta.rowwise().sum();
    }
    delta = layer.weights.transpose() * delta;
  }
  return delta;
}

Vector softmax_t(const Vector& v, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("softmax temperature must be positive and finite, got " +
                      std::to_string(temperature));
  }
  if (!v.allFinite()) throw InputError("softmax input contains non-finite values");
  if (v.size() == 0) throw InputError("softmax input is empty");
  Vector scaled = v / temperature;
  scaled.array() -= scaled.maxCoeff();
  Vector e = scaled.array().exp();
  return e / e.sum();
}

Matrix softmax_columns(const Matrix& utilities, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("softmax temperature must be positive");
  Matrix scaled = utilities / temperature;
  Eigen::RowVectorXd max = scaled.colwise().maxCoeff();
  scaled.rowwise() -= max;
  Matrix e = scaled.array().exp();
  Eigen::RowVectorXd sums = e.colwise().sum();
  return e.array().rowwise() / sums.array();
}

double cross_entropy(const Vector& p, const Vector& one_hot) {
  if (p.size() != one_hot.size()) throw ShapeError("probability and label sizes differ");
  Index hot = -1;
  for (Index k = 0; k < one_hot.size(); ++k) {
    if (one_hot[k] == 1.0) {
      if (hot >= 0) throw InputError("label vector has more than one chosen alternative");
      hot = k;
    } else if (one_hot[k] != 0.0) {
      throw InputError("label vector is not one-hot");
    }
  }
  if (hot < 0) throw InputError("label vector has no chosen alternative");
  return cross_entropy(p, hot);
}

double cross_entropy(const Vector& p, Index label) {
  if (label < 0 || label >= p.size()) throw InputError("label index out of range");
  return -std::log(std::max(p[label], kProbabilityFloor));
}

Index argmax(const Vector& v) {
  Index best = 0;
  for (Index k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

}  // namespace mtlchoice

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mtlchoice {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Probabilities are clamped to this floor before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

enum class Activation { ReLU, Linear };

/// Affine map followed by an activation: a(W x + b).
struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector bias;     // out_dim
  Activation activation = Activation::ReLU;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
  bool all_finite() const { return weights.allFinite() && bias.allFinite(); }
};

using LayerStack = std::vector<DenseLayer>;

/// Gradient with the shape of one DenseLayer.
struct LayerGradient {
  Matrix weights;
  Vector bias;

  static LayerGradient zeros_like(const DenseLayer& layer);
};

/// Throws ShapeError naming the first layer whose input does not match the
/// previous output (or `input_dim` for layer 0).
void check_stack(std::span<const DenseLayer> layers, Index input_dim);

/// Evaluates the composition of `layers` on one input.
Vector forward_stack(const Vector& x, std::span<const DenseLayer> layers);

/// Column-batched variant: each column of `inputs` is one observation.
Matrix forward_stack(const Matrix& inputs, std::span<const DenseLayer> layers);

/// Activations kept by a forward pass for reverse-mode differentiation.
struct StackCache {
  std::vector<Matrix> inputs;           // input to each layer
  std::vector<Matrix> pre_activations;  // W x + b of each layer
};

Matrix forward_cached(const Matrix& inputs, std::span<const DenseLayer> layers,
                      StackCache& cache);

/// Propagates `output_grad` (dL/d output, same shape as the forward output)
/// back through the stack. When `grads` is non-empty it must have one entry
/// per layer and receives accumulated weight/bias gradients. Returns dL/d input.
Matrix backward_cached(std::span<const DenseLayer> layers, const StackCache& cache,
                       const Matrix& output_grad, std::span<LayerGradient> grads);

/// Temperature softmax exp(v_k / T) / sum_j exp(v_j / T), max-subtracted.
Vector softmax_t(const Vector& v, double temperature);

/// Column-wise temperature softmax.
Matrix softmax_columns(const Matrix& utilities, double temperature = 1.0);

/// -sum_k y_k log(max(p_k, floor)). `one_hot` must contain a single 1.
double cross_entropy(const Vector& p, const Vector& one_hot);

/// Label-index form of cross_entropy.
double cross_entropy(const Vector& p, Index label);

/// Index of the largest entry; ties go to the lowest index.
Index argmax(const Vector& v);

}  // namespace mtlchoice

#pragma once

#include <vector>

#include "mtlchoice/linalg.hpp"

namespace mtlchoice {

/// Parameters of the two-headed network: a shared trunk feeding an RP head
/// and an SP head. When both heads are empty the trunk ends in the joint
/// output layer and the network is a single pooled classifier.
struct NetworkParams {
  LayerStack shared;
  LayerStack rp_head;
  LayerStack sp_head;
  double log_temperature = 0.0;

  bool is_joint() const { return rp_head.empty() && sp_head.empty(); }
  double temperature() const;
};

/// Gradients with the exact shapes of a NetworkParams.
struct GradientTape {
  std::vector<LayerGradient> shared;
  std::vector<LayerGradient> rp_head;
  std::vector<LayerGradient> sp_head;
  double log_temperature = 0.0;

  static GradientTape zeros_like(const NetworkParams& params);
};

Index parameter_count(const NetworkParams& params);

/// Flattening order: shared, rp_head, sp_head (per layer: weights column-major,
/// then bias), then log_temperature.
Vector flatten(const NetworkParams& params);
Vector flatten(const GradientTape& tape);
void assign_flat(NetworkParams& params, const Vector& flat);

/// Which terms of the regularized multitask risk are active.
struct LossSpec {
  double lambda0 = 1.0;  // SP risk weight
  double lambda1 = 0.0;  // ||w_shared||^2
  double lambda2 = 0.0;  // ||w_sp||^2
  double lambda3 = 0.0;  // ||w~_sp - w_rp||^2
  bool learn_temperature = true;
  /// Input columns left out of the similarity penalty when a head consumes
  /// raw inputs directly (no shared layers), e.g. SP-only attributes.
  std::vector<Index> similarity_excluded_inputs;
};

/// Mini-batch: each column of *_inputs is one observation.
struct Batch {
  Matrix rp_inputs;
  std::vector<Index> rp_labels;
  Matrix sp_inputs;
  std::vector<Index> sp_labels;
};

struct LossBreakdown {
  double total = 0.0;
  double rp_risk = 0.0;
  double sp_risk = 0.0;
  double shared_penalty = 0.0;      // lambda1 * ||w_shared||^2
  double sp_penalty = 0.0;          // lambda2 * ||w_sp||^2
  double similarity_penalty = 0.0;  // lambda3 * ||w~_sp - w_rp||^2
};

/// Squared Frobenius distance between aligned SP and RP head weights, with
/// the alignment rule documented in mtldnn.hpp.
double similarity_distance_squared(const NetworkParams& params,
                                   std::span<const Index> excluded_inputs);

LossBreakdown evaluate_loss(const NetworkParams& params, const Batch& batch,
                            const LossSpec& spec);

struct LossAndGradient {
  LossBreakdown loss;
  GradientTape gradient;
};

/// Analytic reverse-mode gradient of the total loss, including d/d(log T).
LossAndGradient backward(const NetworkParams& params, const Batch& batch,
                         const LossSpec& spec);

}  // namespace mtlchoice

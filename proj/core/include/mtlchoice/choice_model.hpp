#pragma once

#include <memory>
#include <string>

#include "mtlchoice/dataset.hpp"

namespace mtlchoice {

/// Anything that maps a standardized input row to choice probabilities.
class ChoiceModel {
 public:
  virtual ~ChoiceModel() = default;

  /// Length of the probability vector predicted for `task`. Unmasked pooled
  /// models report K_s for RP rows.
  virtual Index num_alternatives(Task task) const = 0;
  virtual Vector predict(const Vector& x, Task task) const = 0;
  /// dP_alternative / dx in standardized input units.
  virtual Vector probability_gradient(const Vector& x, Task task, Index alternative) const = 0;

  /// One column of probabilities per column of `inputs`.
  virtual Matrix predict_columns(const Matrix& inputs, Task task) const;
};

struct TaskMetrics {
  double joint_accuracy = 0.0;
  double rp_accuracy = 0.0;
  double sp_accuracy = 0.0;
  /// mean RP cross-entropy + lambda0 * mean SP cross-entropy
  double risk = 0.0;
  Index rp_rows = 0;
  Index sp_rows = 0;
};

struct Metrics {
  TaskMetrics train;
  TaskMetrics test;
};

/// Accuracy over pooled rows (each observation weighted equally) and per task.
TaskMetrics evaluate(const ChoiceModel& model, const Dataset& data, double lambda0 = 1.0);
Metrics evaluate(const ChoiceModel& model, const Dataset& train, const Dataset& test,
                 double lambda0 = 1.0);

/// Probabilities restricted to the first `k` alternatives, renormalized.
Vector restrict_probabilities(const Vector& p, Index k);

/// Gradient of softmax component `alternative` w.r.t. the logits, already
/// divided by the temperature: p_a (e_a - p) / T.
Vector softmax_component_gradient(const Vector& p, Index alternative, double temperature = 1.0);

}  // namespace mtlchoice

#pragma once

#include <functional>
#include <string>

#include "mtlchoice/linalg.hpp"

namespace mtlchoice {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction; state is elementwise over a flat parameter vector.
class Adam {
 public:
  Adam(Index size, AdamConfig config = {});

  void step(Vector& params, const Vector& gradient);
  long steps_taken() const { return step_; }

 private:
  AdamConfig config_;
  Vector first_moment_;
  Vector second_moment_;
  long step_ = 0;
  double beta1_power_ = 1.0;
  double beta2_power_ = 1.0;
};

struct MinimizeOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;  // on the max-norm
  int history = 10;
};

struct MinimizeResult {
  Vector point;
  double value = 0.0;
  double gradient_max_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// f(x, grad) returns the objective and writes its gradient.
using Objective = std::function<double(const Vector&, Vector&)>;

/// L-BFGS with Armijo backtracking; every accepted step strictly decreases f.
MinimizeResult minimize_lbfgs(const Objective& objective, Vector start,
                              const MinimizeOptions& options);

}  // namespace mtlchoice

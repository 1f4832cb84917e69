#pragma once

#include <span>

#include "mtlchoice/linalg.hpp"

namespace mtlchoice::detail {

/// Prepends a row of ones to the (expanded) inputs.
Matrix with_intercept(const Matrix& inputs);

struct LogitTerm {
  double nll = 0.0;      // summed negative log-likelihood
  Matrix beta_grad;      // d nll / d beta, K x (p + 1)
  double log_scale_grad = 0.0;  // d nll / d log(scale)
};

/// Negative log-likelihood of softmax(beta X / scale) for labelled columns.
/// `design` is (p + 1) x N with the intercept row first.
LogitTerm logit_nll(const Matrix& beta, const Matrix& design, std::span<const Index> labels,
                    double scale, bool want_gradient);

}  // namespace mtlchoice::detail

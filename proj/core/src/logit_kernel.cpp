#include "logit_kernel.hpp"

#include <cmath>

namespace mtlchoice::detail {

Matrix with_intercept(const Matrix& inputs) {
  Matrix design(inputs.rows() + 1, inputs.cols());
  design.row(0).setOnes();
  design.bottomRows(inputs.rows()) = inputs;
  return design;
}

LogitTerm logit_nll(const Matrix& beta, const Matrix& design, std::span<const Index> labels,
                    double scale, bool want_gradient) {
  LogitTerm term;
  const Matrix scaled = (beta * design) / scale;
  const Matrix probs = softmax_columns(scaled);
  Matrix residual;
  if (want_gradient) residual = probs;
  for (Index i = 0; i < probs.cols(); ++i) {
    const Index y = labels[static_cast<std::size_t>(i)];
    term.nll -= std::log(std::max(probs(y, i), kProbabilityFloor));
    if (want_gradient) residual(y, i) -= 1.0;
  }
  if (want_gradient) {
    term.beta_grad = residual * design.transpose() / scale;
    term.log_scale_grad = -residual.cwiseProduct(scaled).sum();
  }
  return term;
}

}  // namespace mtlchoice::detail

#include "mtlchoice/finite_diff.hpp"

#include "mtlchoice/error.hpp"

namespace mtlchoice {

Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& point, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  Vector grad(point.size());
  Vector probe = point;
  for (Index i = 0; i < point.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double up = f(probe);
    probe[i] = original - h;
    const double down = f(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

GradientTape finite_diff_grad(const std::function<double(const NetworkParams&)>& f,
                              const NetworkParams& params, double h) {
  NetworkParams scratch = params;
  const Vector flat = flatten(params);
  const Vector grad = finite_diff_grad(
      [&](const Vector& theta) {
        assign_flat(scratch, theta);
        return f(scratch);
      },
      flat, h);
  // Reuse the parameter layout to unflatten the gradient.
  NetworkParams as_params = params;
  assign_flat(as_params, grad);
  GradientTape tape;
  auto copy = [](const LayerStack& from, std::vector<LayerGradient>& to) {
    for (const auto& l : from) to.push_back({l.weights, l.bias});
  };
  copy(as_params.shared, tape.shared);
  copy(as_params.rp_head, tape.rp_head);
  copy(as_params.sp_head, tape.sp_head);
  tape.log_temperature = as_params.log_temperature;
  return tape;
}

}  // namespace mtlchoice

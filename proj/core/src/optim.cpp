#include "mtlchoice/optim.hpp"

#include <cmath>
#include <deque>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

Adam::Adam(Index size, AdamConfig config)
    : config_(config), first_moment_(Vector::Zero(size)), second_moment_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& gradient) {
  if (params.size() != first_moment_.size() || gradient.size() != first_moment_.size()) {
    throw ShapeError("Adam state size does not match parameters");
  }
  ++step_;
  beta1_power_ *= config_.beta1;
  beta2_power_ *= config_.beta2;
  first_moment_ = config_.beta1 * first_moment_ + (1.0 - config_.beta1) * gradient;
  second_moment_ =
      config_.beta2 * second_moment_ + (1.0 - config_.beta2) * gradient.cwiseAbs2();
  const double correction1 = 1.0 - beta1_power_;
  const double correction2 = 1.0 - beta2_power_;
  params.array() -= config_.learning_rate * (first_moment_.array() / correction1) /
                    ((second_moment_.array() / correction2).sqrt() + config_.epsilon);
}

MinimizeResult minimize_lbfgs(const Objective& objective, Vector start,
                              const MinimizeOptions& options) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  MinimizeResult result;
  Vector x = std::move(start);
  Vector g(x.size());
  double f = objective(x, g);
  if (!std::isfinite(f)) throw InputError("objective is not finite at the starting point");

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  Vector g_new(x.size());

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      result.converged = true;
      result.message = "gradient tolerance reached";
      break;
    }

    // two-loop recursion
    Vector direction = -g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(direction);
      direction -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      direction *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(direction);
      direction += (alpha[i] - beta) * s_hist[i];
    }
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>());
    bool accepted = false;
    Vector x_new;
    double f_new = f;
    for (int b = 0; b < kMaxBacktracks; ++b) {
      x_new = x + step * direction;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(f_new < f)) {
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      result.message = "line search made no progress";
      break;
    }

    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    f = f_new;
    g = g_new;
  }
  if (iter >= options.max_iterations && !result.converged) {
    result.converged = g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance;
    result.message = result.converged ? "gradient tolerance reached" : "iteration cap reached";
  }
  result.point = std::move(x);
  result.value = f;
  result.gradient_max_norm = g.lpNorm<Eigen::Infinity>();
  result.iterations = iter;
  return result;
}

}  // namespace mtlchoice

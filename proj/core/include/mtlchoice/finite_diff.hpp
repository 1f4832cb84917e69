#pragma once

#include <functional>

#include "mtlchoice/network.hpp"

namespace mtlchoice {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& point, double h);

GradientTape finite_diff_grad(const std::function<double(const NetworkParams&)>& f,
                              const NetworkParams& params, double h);

}  // namespace mtlchoice

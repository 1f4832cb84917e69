#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtlchoice/linalg.hpp"

namespace mtlchoice {

/// Handcrafted feature transform for the linear-in-parameter models.
/// Poly2 appends squares x_j^2 and pairwise products x_i x_j (i < j).
enum class FeatureMap { Identity, Poly2 };

std::string_view to_string(FeatureMap map);
std::optional<FeatureMap> parse_feature_map(std::string_view text);

Index expanded_dim(Index dim, FeatureMap map);
std::vector<std::string> expanded_names(const std::vector<std::string>& names, FeatureMap map);

Vector expand(const Vector& x, FeatureMap map);
Matrix expand_columns(const Matrix& inputs, FeatureMap map);

/// Jacobian d expand(x) / dx, expanded_dim x dim.
Matrix expand_jacobian(const Vector& x, FeatureMap map);

}  // namespace mtlchoice

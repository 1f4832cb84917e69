#include "mtlchoice/features.hpp"

#include "mtlchoice/error.hpp"

namespace mtlchoice {

std::string_view to_string(FeatureMap map) {
  return map == FeatureMap::Identity ? "identity" : "poly2";
}

std::optional<FeatureMap> parse_feature_map(std::string_view text) {
  if (text == "identity") return FeatureMap::Identity;
  if (text == "poly2") return FeatureMap::Poly2;
  return std::nullopt;
}

Index expanded_dim(Index dim, FeatureMap map) {
  if (map == FeatureMap::Identity) return dim;
  return dim + dim + dim * (dim - 1) / 2;
}

std::vector<std::string> expanded_names(const std::vector<std::string>& names,
                                        FeatureMap map) {
  std::vector<std::string> out = names;
  if (map == FeatureMap::Identity) return out;
  for (const auto& n : names) out.push_back(n + "^2");
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) out.push_back(names[i] + "*" + names[j]);
  }
  return out;
}

Vector expand(const Vector& x, FeatureMap map) {
  if (map == FeatureMap::Identity) return x;
  const Index d = x.size();
  Vector out(expanded_dim(d, map));
  out.head(d) = x;
  out.segment(d, d) = x.cwiseAbs2();
  Index k = 2 * d;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) out[k++] = x[i] * x[j];
  }
  return out;
}

Matrix expand_columns(const Matrix& inputs, FeatureMap map) {
  if (map == FeatureMap::Identity) return inputs;
  Matrix out(expanded_dim(inputs.rows(), map), inputs.cols());
  for (Index c = 0; c < inputs.cols(); ++c) out.col(c) = expand(inputs.col(c), map);
  return out;
}

Matrix expand_jacobian(const Vector& x, FeatureMap map) {
  const Index d = x.size();
  Matrix jac = Matrix::Zero(expanded_dim(d, map), d);
  jac.topRows(d).setIdentity();
  if (map == FeatureMap::Identity) return jac;
  for (Index j = 0; j < d; ++j) jac(d + j, j) = 2.0 * x[j];
  Index k = 2 * d;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      jac(k, i) = x[j];
      jac(k, j) = x[i];
      ++k;
    }
  }
  return jac;
}

}  // namespace mtlchoice

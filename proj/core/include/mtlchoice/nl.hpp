#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtlchoice/mnl.hpp"

namespace mtlchoice {

/// Equality constraint between the RP and SP coefficient of `feature` in the
/// utility of `alternative`. The feature name "ASC" addresses the intercept;
/// with a Poly2 map the expanded names ("a^2", "a*b") are addressable too.
struct CoefficientTie {
  std::string feature;
  std::string alternative;
};

/// Joint RP/SP logit with an SP scale parameter: RP probabilities are
/// softmax(beta_rp phi), SP probabilities softmax(beta_sp phi / theta).
///
/// Both tasks normalize the last RP alternative (index K_r - 1) to zero so
/// tied coefficients are measured against the same reference.
class NlModel : public ChoiceModel {
 public:
  Matrix beta_rp;  // K_r x (p + 1)
  Matrix beta_sp;  // K_s x (p + 1)
  double log_theta = 0.0;
  std::vector<std::pair<Index, Index>> ties;  // (alternative, column), resolved
  FeatureMap feature_map = FeatureMap::Identity;
  /// False when no ties exist: theta is then held at 1 because only
  /// beta_sp / theta is identified.
  bool theta_identified = false;
  FitStatus status;

  double theta() const;
  Index reference_alternative() const { return beta_rp.rows() - 1; }

  Index num_alternatives(Task task) const override;
  Vector predict(const Vector& x, Task task) const override;
  Vector probability_gradient(const Vector& x, Task task, Index alternative) const override;
};

/// Maps tie declarations to (alternative, column) coefficient addresses.
/// Throws ConfigError for unknown names, SP-only alternatives or features,
/// the reference alternative, and duplicates.
std::vector<std::pair<Index, Index>> resolve_ties(const FeatureSchema& schema,
                                                  std::span<const CoefficientTie> ties,
                                                  FeatureMap map = FeatureMap::Identity);

/// Minimizes the pooled mean negative log-likelihood over (beta_rp, beta_sp,
/// log theta) by L-BFGS, each tied pair represented by one parameter.
NlModel fit_nl(const Dataset& rp_data, const Dataset& sp_data,
               std::span<const CoefficientTie> ties, const FitOptions& options = {},
               FeatureMap map = FeatureMap::Identity);

/// Convenience overload splitting a task-tagged dataset.
NlModel fit_nl(const Dataset& data, std::span<const CoefficientTie> ties,
               const FitOptions& options = {}, FeatureMap map = FeatureMap::Identity);

/// -(1/N) [sum_rp log P + sum_sp log P] for explicit parameters.
double nl_risk(const Matrix& beta_rp, const Matrix& beta_sp, double theta,
               const Dataset& rp_data, const Dataset& sp_data,
               FeatureMap map = FeatureMap::Identity);

/// Summed log-likelihood over both tasks at the model's parameters.
double nl_log_likelihood(const NlModel& model, const Dataset& data);

Vector predict_nl(const NlModel& model, const Vector& x, Task task);

}  // namespace mtlchoice

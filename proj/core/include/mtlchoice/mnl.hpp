#pragma once

#include <string>
#include <vector>

#include "mtlchoice/choice_model.hpp"
#include "mtlchoice/features.hpp"

namespace mtlchoice {

enum class Scope { RP, SP, Joint };

std::string_view to_string(Scope scope);

struct FitOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;  // max-norm of the mean-NLL gradient
  double divergence_norm = 1e4;      // ||beta|| above this flags separation
};

struct FitStatus {
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  double log_likelihood = 0.0;  // summed over fitted rows
  std::vector<std::string> warnings;
};

/// Linear-in-parameter multinomial logit. Row k of `beta` holds the intercept
/// (column 0) and the coefficients on the (optionally expanded) features of
/// alternative k; the last row is fixed at zero for identification.
///
/// A Joint-scope model spans the SP alternatives and scores RP rows over all
/// of them unless `mask_rp` restricts RP predictions to the first K_r.
class MnlModel : public ChoiceModel {
 public:
  Matrix beta;
  Scope scope = Scope::RP;
  FeatureMap feature_map = FeatureMap::Identity;
  bool mask_rp = false;
  Index num_rp_alternatives = 0;
  FitStatus status;

  Index num_alternatives(Task task) const override;
  Vector predict(const Vector& x, Task task) const override;
  Vector probability_gradient(const Vector& x, Task task, Index alternative) const override;

  Vector utilities(const Vector& x) const;
  Index num_coefficients() const { return beta.cols(); }

 private:
  void check_task(Task task) const;
};

/// Maximum likelihood by L-BFGS on the mean negative log-likelihood, starting
/// from zero. RP/SP scopes use only that task's rows; Joint pools both with
/// K = K_s.
MnlModel fit_mnl(const Dataset& data, Scope scope, const FitOptions& options = {},
                 FeatureMap map = FeatureMap::Identity);

/// softmax(beta [1; phi(x)]) over all of the model's alternatives.
Vector predict_mnl(const MnlModel& model, const Vector& x);

/// Summed log-likelihood of the rows in the model's scope.
double mnl_log_likelihood(const MnlModel& model, const Dataset& data);

/// Separate RP and SP logits (the MNL-SPT baseline).
class MnlSptModel : public ChoiceModel {
 public:
  MnlModel rp;
  MnlModel sp;

  Index num_alternatives(Task task) const override;
  Vector predict(const Vector& x, Task task) const override;
  Vector probability_gradient(const Vector& x, Task task, Index alternative) const override;
};

MnlSptModel fit_mnl_spt(const Dataset& data, const FitOptions& options = {},
                        FeatureMap map = FeatureMap::Identity);

}  // namespace mtlchoice

#include "mtlchoice/nl.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "logit_kernel.hpp"
#include "mtlchoice/error.hpp"
#include "mtlchoice/optim.hpp"

namespace mtlchoice {

namespace {

constexpr double kThetaDivergence = 10.0;

struct TaskDesign {
  Matrix design;
  std::vector<Index> labels;
};

TaskDesign task_design(const Dataset& data, Task task, FeatureMap map) {
  const auto rows = data.indices(task);
  Matrix inputs(data.features().rows(), static_cast<Index>(rows.size()));
  TaskDesign out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    inputs.col(static_cast<Index>(i)) = data.x(rows[i]);
    out.labels.push_back(data.choice(rows[i]));
  }
  out.design = detail::with_intercept(expand_columns(inputs, map));
  return out;
}

// Where one free parameter is written: RP and/or SP coefficient matrix.
struct Slot {
  Index row = 0;
  Index col = 0;
  bool in_rp = false;
  bool in_sp = false;
};

}  // namespace

double NlModel::theta() const { return std::exp(log_theta); }

Index NlModel::num_alternatives(Task task) const {
  return task == Task::RP ? beta_rp.rows() : beta_sp.rows();
}

Vector NlModel::predict(const Vector& x, Task task) const { return predict_nl(*this, x, task); }

Vector NlModel::probability_gradient(const Vector& x, Task task, Index alternative) const {
  const Vector p = predict_nl(*this, x, task);
  if (alternative < 0 || alternative >= p.size()) throw InputError("alternative out of range");
  const double scale = task == Task::SP ? theta() : 1.0;
  const Matrix& beta = task == Task::RP ? beta_rp : beta_sp;
  const Vector logit_grad = softmax_component_gradient(p, alternative, scale);
  return expand_jacobian(x, feature_map).transpose() *
         (beta.rightCols(beta.cols() - 1).transpose() * logit_grad);
}

Vector predict_nl(const NlModel& model, const Vector& x, Task task) {
  const Vector phi = expand(x, model.feature_map);
  const Matrix& beta = task == Task::RP ? model.beta_rp : model.beta_sp;
  if (phi.size() + 1 != beta.cols()) throw ShapeError("NL input has the wrong dimension");
  const Vector v = beta.col(0) + beta.rightCols(beta.cols() - 1) * phi;
  return softmax_t(v, task == Task::SP ? model.theta() : 1.0);
}

std::vector<std::pair<Index, Index>> resolve_ties(const FeatureSchema& schema,
                                                  std::span<const CoefficientTie> ties,
                                                  FeatureMap map) {
  const auto names = expanded_names(schema.names(), map);
  // Expanded columns that vanish on RP rows involve an SP-only feature.
  Vector probe = Vector::Ones(schema.dim());
  for (Index j : schema.av_specific_indices()) probe[j] = 0.0;
  const Vector probe_expanded = expand(probe, map);
  const Index reference = schema.num_rp_alternatives() - 1;

  std::vector<std::pair<Index, Index>> out;
  std::set<std::pair<Index, Index>> seen;
  for (const auto& tie : ties) {
    const auto alt = schema.alternative_index(tie.alternative, Task::RP);
    if (!alt) {
      throw ConfigError("tie on '" + tie.feature + "' for alternative '" + tie.alternative +
                        "': alternative is not offered in RP and cannot be tied");
    }
    if (*alt == reference) {
      throw ConfigError("tie on '" + tie.feature + "' for alternative '" + tie.alternative +
                        "': the reference alternative is normalized to zero");
    }
    Index col = 0;
    if (tie.feature != "ASC") {
      auto it = std::find(names.begin(), names.end(), tie.feature);
      if (it == names.end()) throw ConfigError("tie references unknown feature '" + tie.feature + "'");
      const auto j = static_cast<Index>(it - names.begin());
      if (probe_expanded[j] == 0.0) {
        throw ConfigError("feature '" + tie.feature +
                          "' exists only in SP and cannot be tied across tasks");
      }
      col = j + 1;
    }
    if (!seen.insert({*alt, col}).second) {
      throw ConfigError("duplicate tie on '" + tie.feature + "' for '" + tie.alternative + "'");
    }
    out.emplace_back(*alt, col);
  }
  return out;
}

double nl_risk(const Matrix& beta_rp, const Matrix& beta_sp, double theta,
               const Dataset& rp_data, const Dataset& sp_data, FeatureMap map) {
  if (!(theta > 0.0)) throw DomainError("theta must be positive");
  const auto rp = task_design(rp_data, Task::RP, map);
  const auto sp = task_design(sp_data, Task::SP, map);
  const double n = static_cast<double>(rp.labels.size() + sp.labels.size());
  const double nll = detail::logit_nll(beta_rp, rp.design, rp.labels, 1.0, false).nll +
                     detail::logit_nll(beta_sp, sp.design, sp.labels, theta, false).nll;
  return nll / n;
}

double nl_log_likelihood(const NlModel& model, const Dataset& data) {
  const auto rp = task_design(data, Task::RP, model.feature_map);
  const auto sp = task_design(data, Task::SP, model.feature_map);
  return -(detail::logit_nll(model.beta_rp, rp.design, rp.labels, 1.0, false).nll +
           detail::logit_nll(model.beta_sp, sp.design, sp.labels, model.theta(), false).nll);
}

NlModel fit_nl(const Dataset& rp_data, const Dataset& sp_data,
               std::span<const CoefficientTie> ties, const FitOptions& options,
               FeatureMap map) {
  const auto rp = task_design(rp_data, Task::RP, map);
  const auto sp = task_design(sp_data, Task::SP, map);
  if (rp.labels.empty() || sp.labels.empty()) {
    throw InputError("nested logit needs both RP and SP rows");
  }
  const FeatureSchema& schema = rp_data.schema();
  const Index kr = schema.num_rp_alternatives();
  const Index ks = schema.num_sp_alternatives();
  const Index width = rp.design.rows();
  const Index reference = kr - 1;

  NlModel model;
  model.feature_map = map;
  model.ties = resolve_ties(schema, ties, map);
  model.theta_identified = !model.ties.empty();

  if (!model.theta_identified) {
    // Without ties the likelihood separates into two logits; fit them as such.
    const MnlModel r = fit_mnl(rp_data, Scope::RP, options, map);
    const MnlModel s = fit_mnl(sp_data, Scope::SP, options, map);
    model.beta_rp = r.beta;
    // re-reference SP utilities to the RP reference alternative
    model.beta_sp = s.beta.rowwise() - s.beta.row(reference);
    model.status.converged = r.status.converged && s.status.converged;
    model.status.iterations = r.status.iterations + s.status.iterations;
    model.status.gradient_max_norm =
        std::max(r.status.gradient_max_norm, s.status.gradient_max_norm);
    model.status.log_likelihood = r.status.log_likelihood + s.status.log_likelihood;
    for (const auto* part : {&r, &s}) {
      for (const auto& w : part->status.warnings) {
        model.status.warnings.push_back(std::string(to_string(part->scope)) + ": " + w);
      }
    }
    model.status.warnings.push_back(
        "no ties: theta is not identified and is reported fixed at 1");
    return model;
  }

  std::set<std::pair<Index, Index>> tied(model.ties.begin(), model.ties.end());
  std::vector<Slot> slots;
  for (Index c = 0; c < width; ++c) {
    for (Index r = 0; r < kr; ++r) {
      if (r == reference) continue;
      slots.push_back({r, c, true, tied.count({r, c}) > 0});
    }
  }
  for (Index c = 0; c < width; ++c) {
    for (Index r = 0; r < ks; ++r) {
      if (r == reference || tied.count({r, c}) > 0) continue;
      slots.push_back({r, c, false, true});
    }
  }
  const auto n_slots = static_cast<Index>(slots.size());
  const Index n_params = n_slots + (model.theta_identified ? 1 : 0);
  const double n = static_cast<double>(rp.labels.size() + sp.labels.size());

  Matrix beta_rp = Matrix::Zero(kr, width);
  Matrix beta_sp = Matrix::Zero(ks, width);
  auto unpack = [&](const Vector& theta_vec) {
    for (Index s = 0; s < n_slots; ++s) {
      const auto& slot = slots[static_cast<std::size_t>(s)];
      if (slot.in_rp) beta_rp(slot.row, slot.col) = theta_vec[s];
      if (slot.in_sp) beta_sp(slot.row, slot.col) = theta_vec[s];
    }
    return model.theta_identified ? theta_vec[n_slots] : 0.0;
  };

  const Objective objective = [&](const Vector& theta_vec, Vector& grad) {
    const double log_theta = unpack(theta_vec);
    const auto rp_term = detail::logit_nll(beta_rp, rp.design, rp.labels, 1.0, true);
    const auto sp_term =
        detail::logit_nll(beta_sp, sp.design, sp.labels, std::exp(log_theta), true);
    grad.setZero(n_params);
    for (Index s = 0; s < n_slots; ++s) {
      const auto& slot = slots[static_cast<std::size_t>(s)];
      if (slot.in_rp) grad[s] += rp_term.beta_grad(slot.row, slot.col);
      if (slot.in_sp) grad[s] += sp_term.beta_grad(slot.row, slot.col);
    }
    if (model.theta_identified) grad[n_slots] = sp_term.log_scale_grad;
    grad /= n;
    return (rp_term.nll + sp_term.nll) / n;
  };

  MinimizeOptions opt;
  opt.max_iterations = options.max_iterations;
  opt.gradient_tolerance = options.gradient_tolerance;
  const auto result = minimize_lbfgs(objective, Vector::Zero(n_params), opt);

  model.log_theta = unpack(result.point);
  model.beta_rp = beta_rp;
  model.beta_sp = beta_sp;
  model.status.converged = result.converged;
  model.status.iterations = result.iterations;
  model.status.gradient_max_norm = result.gradient_max_norm;
  model.status.log_likelihood = -result.value * n;
  if (!result.converged) model.status.warnings.push_back("not converged: " + result.message);
  if (std::abs(model.log_theta) > kThetaDivergence) {
    model.status.warnings.push_back("theta diverging (|log theta| > 10); fit flagged");
  }
  Vector ray = result.point, unused;
  ray.head(n_slots) *= 2.0;
  const bool ray_improves = objective(ray, unused) < result.value;
  if (std::max(model.beta_rp.norm(), model.beta_sp.norm()) > options.divergence_norm ||
      ray_improves) {
    model.status.warnings.push_back("coefficients diverging; data may be perfectly separated");
  }
  return model;
}

NlModel fit_nl(const Dataset& data, std::span<const CoefficientTie> ties,
               const FitOptions& options, FeatureMap map) {
  return fit_nl(data.only(Task::RP), data.only(Task::SP), ties, options, map);
}

}  // namespace mtlchoice

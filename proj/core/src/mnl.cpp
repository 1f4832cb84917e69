#include "mtlchoice/mnl.hpp"

#include "logit_kernel.hpp"
#include "mtlchoice/error.hpp"
#include "mtlchoice/optim.hpp"

namespace mtlchoice {

std::string_view to_string(Scope scope) {
  switch (scope) {
    case Scope::RP: return "rp";
    case Scope::SP: return "sp";
    case Scope::Joint: return "joint";
  }
  return "unknown";
}

namespace {

struct DesignRows {
  Matrix design;
  std::vector<Index> labels;
};

DesignRows gather(const Dataset& data, Scope scope, FeatureMap map) {
  std::vector<Index> rows;
  if (scope == Scope::RP) {
    rows = data.indices(Task::RP);
  } else if (scope == Scope::SP) {
    rows = data.indices(Task::SP);
  } else {
    rows.resize(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
  }
  Matrix inputs(data.features().rows(), static_cast<Index>(rows.size()));
  DesignRows out;
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    inputs.col(static_cast<Index>(i)) = data.x(rows[i]);
    out.labels.push_back(data.choice(rows[i]));
  }
  out.design = detail::with_intercept(expand_columns(inputs, map));
  return out;
}

Index scope_alternatives(const Dataset& data, Scope scope) {
  return scope == Scope::RP ? data.num_alternatives(Task::RP) : data.num_alternatives(Task::SP);
}

}  // namespace

void MnlModel::check_task(Task task) const {
  if ((scope == Scope::RP && task != Task::RP) || (scope == Scope::SP && task != Task::SP)) {
    throw InputError("MNL fitted on " + std::string(to_string(scope)) +
                     " rows cannot score " + std::string(to_string(task)) + " rows");
  }
}

Index MnlModel::num_alternatives(Task task) const {
  check_task(task);
  if (scope == Scope::Joint && task == Task::RP && mask_rp) return num_rp_alternatives;
  return beta.rows();
}

Vector MnlModel::utilities(const Vector& x) const {
  const Vector phi = expand(x, feature_map);
  if (phi.size() + 1 != beta.cols()) throw ShapeError("MNL input has the wrong dimension");
  return beta.col(0) + beta.rightCols(beta.cols() - 1) * phi;
}

Vector MnlModel::predict(const Vector& x, Task task) const {
  check_task(task);
  const Vector p = softmax_t(utilities(x), 1.0);
  if (scope == Scope::Joint && task == Task::RP && mask_rp) {
    return restrict_probabilities(p, num_rp_alternatives);
  }
  return p;
}

Vector MnlModel::probability_gradient(const Vector& x, Task task, Index alternative) const {
  const Vector p = predict(x, task);
  if (alternative < 0 || alternative >= p.size()) throw InputError("alternative out of range");
  const Vector logit_grad = softmax_component_gradient(p, alternative);
  const Matrix slopes = beta.rightCols(beta.cols() - 1).topRows(p.size());
  return expand_jacobian(x, feature_map).transpose() * (slopes.transpose() * logit_grad);
}

MnlModel fit_mnl(const Dataset& data, Scope scope, const FitOptions& options, FeatureMap map) {
  const DesignRows rows = gather(data, scope, map);
  const auto n = static_cast<double>(rows.labels.size());
  if (rows.labels.empty()) {
    throw InputError("no rows in scope " + std::string(to_string(scope)) + " to fit");
  }
  const Index k = scope_alternatives(data, scope);
  const Index width = rows.design.rows();

  MnlModel model;
  model.scope = scope;
  model.feature_map = map;
  model.num_rp_alternatives = data.num_alternatives(Task::RP);
  model.beta = Matrix::Zero(k, width);

  Matrix beta = Matrix::Zero(k, width);
  const Objective objective = [&](const Vector& theta, Vector& grad) {
    beta.topRows(k - 1).reshaped() = theta;
    const auto term = detail::logit_nll(beta, rows.design, rows.labels, 1.0, true);
    grad = Matrix(term.beta_grad.topRows(k - 1)).reshaped() / n;
    return term.nll / n;
  };
  MinimizeOptions opt;
  opt.max_iterations = options.max_iterations;
  opt.gradient_tolerance = options.gradient_tolerance;
  const auto result = minimize_lbfgs(objective, Vector::Zero((k - 1) * width), opt);

  model.beta.topRows(k - 1).reshaped() = result.point;
  model.status.converged = result.converged;
  model.status.iterations = result.iterations;
  model.status.gradient_max_norm = result.gradient_max_norm;
  model.status.log_likelihood = -result.value * n;
  if (!result.converged) model.status.warnings.push_back("not converged: " + result.message);
  // The gradient test can stop at a modest norm on separable data; there the
  // likelihood still improves along the ray through the fitted point.
  Vector unused;
  const bool ray_improves = objective(2.0 * result.point, unused) < result.value;
  if (model.beta.norm() > options.divergence_norm || ray_improves) {
    model.status.warnings.push_back(
        "coefficients diverging; data may be perfectly separated, returning partial result");
  }
  return model;
}

Vector predict_mnl(const MnlModel& model, const Vector& x) {
  return softmax_t(model.utilities(x), 1.0);
}

double mnl_log_likelihood(const MnlModel& model, const Dataset& data) {
  const DesignRows rows = gather(data, model.scope, model.feature_map);
  return -detail::logit_nll(model.beta, rows.design, rows.labels, 1.0, false).nll;
}

Index MnlSptModel::num_alternatives(Task task) const {
  return task == Task::RP ? rp.num_alternatives(task) : sp.num_alternatives(task);
}

Vector MnlSptModel::predict(const Vector& x, Task task) const {
  return task == Task::RP ? rp.predict(x, task) : sp.predict(x, task);
}

Vector MnlSptModel::probability_gradient(const Vector& x, Task task, Index alternative) const {
  return task == Task::RP ? rp.probability_gradient(x, task, alternative)
                          : sp.probability_gradient(x, task, alternative);
}

MnlSptModel fit_mnl_spt(const Dataset& data, const FitOptions& options, FeatureMap map) {
  MnlSptModel model;
  model.rp = fit_mnl(data, Scope::RP, options, map);
  model.sp = fit_mnl(data, Scope::SP, options, map);
  return model;
}

}  // namespace mtlchoice

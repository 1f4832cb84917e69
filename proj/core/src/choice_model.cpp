#include "mtlchoice/choice_model.hpp"

#include "mtlchoice/error.hpp"

namespace mtlchoice {

Matrix ChoiceModel::predict_columns(const Matrix& inputs, Task task) const {
  Matrix out(num_alternatives(task), inputs.cols());
  for (Index c = 0; c < inputs.cols(); ++c) out.col(c) = predict(inputs.col(c), task);
  return out;
}

TaskMetrics evaluate(const ChoiceModel& model, const Dataset& data, double lambda0) {
  TaskMetrics m;
  double rp_hits = 0.0, sp_hits = 0.0, rp_ce = 0.0, sp_ce = 0.0;
  for (Task task : {Task::RP, Task::SP}) {
    const auto rows = data.indices(task);
    if (rows.empty()) continue;
    Matrix inputs(data.features().rows(), static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      inputs.col(static_cast<Index>(i)) = data.x(rows[i]);
    }
    const Matrix probs = model.predict_columns(inputs, task);
    double hits = 0.0, ce = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Vector p = probs.col(static_cast<Index>(i));
      const Index y = data.choice(rows[i]);
      if (argmax(p) == y) hits += 1.0;
      ce += cross_entropy(p, y);
    }
    if (task == Task::RP) {
      rp_hits = hits;
      rp_ce = ce;
      m.rp_rows = static_cast<Index>(rows.size());
    } else {
      sp_hits = hits;
      sp_ce = ce;
      m.sp_rows = static_cast<Index>(rows.size());
    }
  }
  if (m.rp_rows > 0) {
    m.rp_accuracy = rp_hits / static_cast<double>(m.rp_rows);
    m.risk += rp_ce / static_cast<double>(m.rp_rows);
  }
  if (m.sp_rows > 0) {
    m.sp_accuracy = sp_hits / static_cast<double>(m.sp_rows);
    m.risk += lambda0 * sp_ce / static_cast<double>(m.sp_rows);
  }
  const Index n = m.rp_rows + m.sp_rows;
  if (n > 0) m.joint_accuracy = (rp_hits + sp_hits) / static_cast<double>(n);
  return m;
}

Metrics evaluate(const ChoiceModel& model, const Dataset& train, const Dataset& test,
                 double lambda0) {
  return {evaluate(model, train, lambda0), evaluate(model, test, lambda0)};
}

Vector restrict_probabilities(const Vector& p, Index k) {
  if (k <= 0 || k > p.size()) throw ShapeError("restriction size out of range");
  Vector head = p.head(k);
  return head / head.sum();
}

Vector softmax_component_gradient(const Vector& p, Index alternative, double temperature) {
  Vector g = -p[alternative] * p;
  g[alternative] += p[alternative];
  return g / temperature;
}

}  // namespace mtlchoice

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mtlchoice/choice_model.hpp"

namespace mtlchoice {

/// Which variable to vary (raw units), over which grid, for which task.
/// Empty `alternatives` traces every alternative of the task.
struct CurveSpec {
  std::string variable;
  std::vector<double> grid;
  Task task = Task::SP;
  std::vector<std::string> alternatives;

  void validate(const FeatureSchema& schema) const;
};

struct CurvePoint {
  double grid_value = 0.0;
  Index alternative = 0;
  std::string model_id;
  double mean_probability = 0.0;
};

struct CurveTable {
  std::vector<std::string> alternative_names;  // indexed by alternative
  std::vector<CurvePoint> points;
};

struct NamedModel {
  std::string id;
  const ChoiceModel* model = nullptr;
};

/// Partial-dependence curve: for each grid value the variable is overwritten
/// on every row of `raw` belonging to spec.task, rows are standardized with
/// `scaler`, and predicted probabilities are averaged over rows. With more
/// than one model an extra curve with id "mean" averages the model curves.
CurveTable prob_curve(const std::vector<NamedModel>& models, const Dataset& raw,
                      const Scaler& scaler, const CurveSpec& spec);

struct ElasticitySpec {
  std::string variable;
  std::string alternative;
  Task task = Task::SP;
};

struct RowElasticity {
  Index row = 0;
  double probability = 0.0;
  double derivative = 0.0;  // dP / d raw variable
  double elasticity = 0.0;
};

struct ElasticityResult {
  ElasticitySpec spec;
  double mean = 0.0;
  Index used_rows = 0;
  Index excluded_rows = 0;  // x == 0 or P < 1e-6
  std::vector<RowElasticity> rows;
};

/// Sample mean of (dP/dx) * x / P in raw units, the derivative chained
/// through the scaler.
ElasticityResult elasticity(const ChoiceModel& model, const Dataset& raw, const Scaler& scaler,
                            const ElasticitySpec& spec);

void write_curve_csv(std::ostream& out, const CurveTable& table,
                     const std::vector<std::string>& comments = {});
void write_elasticity_csv(std::ostream& out, const std::vector<ElasticityResult>& results,
                          const std::vector<std::string>& comments = {});
/// Static line chart: thin lines per model, thick lines for the "mean" curve.
void write_curve_svg(std::ostream& out, const CurveTable& table, const std::string& title);

}  // namespace mtlchoice

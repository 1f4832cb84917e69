#include "mtlchoice/interpret.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

namespace {

constexpr double kMinProbability = 1e-6;

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Index require_feature(const FeatureSchema& schema, const std::string& name) {
  const auto j = schema.feature_index(name);
  if (!j) throw InputError("unknown variable '" + name + "'");
  return *j;
}

Index require_alternative(const FeatureSchema& schema, const std::string& name, Task task) {
  const auto k = schema.alternative_index(name, task);
  if (!k) throw InputError("unknown " + std::string(to_string(task)) + " alternative '" + name + "'");
  return *k;
}

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void CurveSpec::validate(const FeatureSchema& schema) const {
  const Index j = require_feature(schema, variable);
  if (schema.is_av_specific(j) && task != Task::SP) {
    throw InputError("variable '" + variable + "' exists only in SP rows");
  }
  if (grid.empty()) throw InputError("curve grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw InputError("curve grid must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("curve grid must be strictly increasing");
  }
  for (const auto& a : alternatives) require_alternative(schema, a, task);
}

CurveTable prob_curve(const std::vector<NamedModel>& models, const Dataset& raw,
                      const Scaler& scaler, const CurveSpec& spec) {
  const FeatureSchema& schema = raw.schema();
  spec.validate(schema);
  if (models.empty()) throw InputError("no models given");
  const Index var = require_feature(schema, spec.variable);
  const auto rows = raw.indices(spec.task);
  if (rows.empty()) throw InputError("no " + std::string(to_string(spec.task)) + " rows to average over");

  const Index k = models.front().model->num_alternatives(spec.task);
  for (const auto& m : models) {
    if (!m.model) throw InputError("null model '" + m.id + "'");
    if (m.model->num_alternatives(spec.task) != k) {
      throw ShapeError("models disagree on the number of alternatives");
    }
  }
  std::vector<Index> traced;
  if (spec.alternatives.empty()) {
    for (Index a = 0; a < k; ++a) traced.push_back(a);
  } else {
    for (const auto& a : spec.alternatives) traced.push_back(require_alternative(schema, a, spec.task));
  }

  CurveTable table;
  const auto& all_names = schema.alternatives(Task::SP);
  for (Index a = 0; a < k; ++a) table.alternative_names.push_back(all_names[static_cast<std::size_t>(a)]);

  Matrix inputs(raw.features().rows(), static_cast<Index>(rows.size()));
  for (double g : spec.grid) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Vector x = raw.x(rows[i]);
      x[var] = g;
      inputs.col(static_cast<Index>(i)) = scaler.transform(x, spec.task);
    }
    Vector mean_curve = Vector::Zero(k);
    for (const auto& m : models) {
      const Vector avg = m.model->predict_columns(inputs, spec.task).rowwise().mean();
      mean_curve += avg;
      for (Index a : traced) table.points.push_back({g, a, m.id, avg[a]});
    }
    if (models.size() > 1) {
      mean_curve /= static_cast<double>(models.size());
      for (Index a : traced) table.points.push_back({g, a, "mean", mean_curve[a]});
    }
  }
  return table;
}

ElasticityResult elasticity(const ChoiceModel& model, const Dataset& raw, const Scaler& scaler,
                            const ElasticitySpec& spec) {
  const FeatureSchema& schema = raw.schema();
  const Index var = require_feature(schema, spec.variable);
  if (schema.is_av_specific(var) && spec.task != Task::SP) {
    throw InputError("variable '" + spec.variable + "' exists only in SP rows");
  }
  const Index alt = require_alternative(schema, spec.alternative, spec.task);
  if (alt >= model.num_alternatives(spec.task)) throw InputError("alternative out of range");
  const auto rows = raw.indices(spec.task);
  if (rows.empty()) throw InputError("no " + std::string(to_string(spec.task)) + " rows");

  ElasticityResult out;
  out.spec = spec;
  double sum = 0.0;
  for (Index row : rows) {
    const Vector x = raw.x(row);
    const Vector z = scaler.transform(x, spec.task);
    const double p = model.predict(z, spec.task)[alt];
    if (x[var] == 0.0 || p < kMinProbability) {
      ++out.excluded_rows;
      continue;
    }
    const double dp = model.probability_gradient(z, spec.task, alt)[var] * scaler.derivative(var);
    const double e = dp * x[var] / p;
    out.rows.push_back({row, p, dp, e});
    sum += e;
  }
  out.used_rows = static_cast<Index>(out.rows.size());
  if (out.used_rows == 0) throw InputError("every row was excluded from the elasticity");
  out.mean = sum / static_cast<double>(out.used_rows);
  return out;
}

void write_curve_csv(std::ostream& out, const CurveTable& table,
                     const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "grid_value,alternative,model_id,mean_probability\n";
  for (const auto& p : table.points) {
    out << num(p.grid_value) << ',' << table.alternative_names[static_cast<std::size_t>(p.alternative)]
        << ',' << p.model_id << ',' << num(p.mean_probability) << '\n';
  }
}

void write_elasticity_csv(std::ostream& out, const std::vector<ElasticityResult>& results,
                          const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "variable,alternative,task,elasticity,used_rows,excluded_rows\n";
  for (const auto& r : results) {
    out << r.spec.variable << ',' << r.spec.alternative << ',' << to_string(r.spec.task) << ','
        << num(r.mean) << ',' << r.used_rows << ',' << r.excluded_rows << '\n';
  }
}

void write_curve_svg(std::ostream& out, const CurveTable& table, const std::string& title) {
  constexpr double W = 640, H = 400, L = 60, R = 140, T = 40, B = 50;
  double gmin = 0, gmax = 1;
  if (!table.points.empty()) {
    gmin = gmax = table.points.front().grid_value;
    for (const auto& p : table.points) {
      gmin = std::min(gmin, p.grid_value);
      gmax = std::max(gmax, p.grid_value);
    }
  }
  if (gmax == gmin) gmax = gmin + 1;
  auto sx = [&](double g) { return L + (g - gmin) / (gmax - gmin) * (W - L - R); };
  auto sy = [&](double p) { return H - B - p * (H - T - B); };

  std::map<std::pair<std::string, Index>, std::vector<std::pair<double, double>>> lines;
  for (const auto& p : table.points) lines[{p.model_id, p.alternative}].push_back({p.grid_value, p.mean_probability});

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double p = i / 4.0;
    out << "<text x=\"" << L - 8 << "\" y=\"" << sy(p) + 4 << "\" text-anchor=\"end\">" << num(p)
        << "</text>\n";
  }
  out << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\">" << num(gmin) << "</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"end\">" << num(gmax)
      << "</text>\n";
  for (const auto& [key, pts] : lines) {
    const bool mean = key.first == "mean";
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[key.second % 8] << "\" stroke-width=\""
        << (mean ? 3 : 1) << "\" stroke-opacity=\"" << (mean ? 1.0 : 0.4) << "\" points=\"";
    for (const auto& [g, p] : pts) out << sx(g) << ',' << sy(p) << ' ';
    out << "\"/>\n";
  }
  Index legend = 0;
  for (std::size_t a = 0; a < table.alternative_names.size(); ++a) {
    bool used = false;
    for (const auto& [key, pts] : lines) used = used || key.second == static_cast<Index>(a);
    if (!used) continue;
    const double y = T + 16.0 * static_cast<double>(legend++);
    out << "<rect x=\"" << W - R + 10 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[a % 8] << "\"/>\n"
        << "<text x=\"" << W - R + 26 << "\" y=\"" << y << "\">" << table.alternative_names[a]
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace mtlchoice

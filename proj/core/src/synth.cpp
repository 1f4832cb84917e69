#include "mtlchoice/synth.hpp"

#include <random>

#include "mtlchoice/error.hpp"
#include "mtlchoice/rng.hpp"

namespace mtlchoice {

std::string_view to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::LinearMnl: return "linear_mnl";
    case DgpKind::ScaledNl: return "scaled_nl";
    case DgpKind::Nonlinear: return "nonlinear";
  }
  return "unknown";
}

std::optional<DgpKind> parse_dgp_kind(std::string_view text) {
  if (text == "linear_mnl") return DgpKind::LinearMnl;
  if (text == "scaled_nl") return DgpKind::ScaledNl;
  if (text == "nonlinear") return DgpKind::Nonlinear;
  return std::nullopt;
}

void DgpSpec::validate() const {
  const Index d = schema.dim();
  const Index kr = schema.num_rp_alternatives();
  const Index ks = schema.num_sp_alternatives();
  if (beta_rp.rows() != kr || beta_rp.cols() != d + 1) {
    throw ConfigError("beta_rp must be K_r x (d + 1)");
  }
  if (beta_sp.rows() != ks || beta_sp.cols() != d + 1) {
    throw ConfigError("beta_sp must be K_s x (d + 1)");
  }
  if (!beta_rp.allFinite() || !beta_sp.allFinite()) throw ConfigError("non-finite coefficients");
  if (kind == DgpKind::ScaledNl && !(theta > 0.0)) {
    throw ConfigError("theta must be positive for a scaled_nl spec");
  }
  for (const auto& [alt, col] : shared_map) {
    if (alt < 0 || alt >= kr || col < 0 || col > d) {
      throw ConfigError("shared_map entry (" + std::to_string(alt) + ", " + std::to_string(col) +
                        ") is not a coefficient present in both tasks");
    }
  }
  if (location.size() != d || spread.size() != d) {
    throw ConfigError("location and spread must have one entry per feature");
  }
  if ((spread.array() <= 0.0).any()) throw ConfigError("spread entries must be positive");
  if (kind == DgpKind::Nonlinear) {
    if (d < 2) throw ConfigError("nonlinear spec needs at least two features");
    if (nonlinear_rp.rows() != kr || nonlinear_rp.cols() != 3 || nonlinear_sp.rows() != ks ||
        nonlinear_sp.cols() != 3) {
      throw ConfigError("nonlinear coefficient tables must be K x 3");
    }
  }
}

Matrix DgpSpec::effective_beta_sp() const {
  Matrix out = beta_sp;
  for (const auto& [alt, col] : shared_map) out(alt, col) = beta_rp(alt, col);
  return out;
}

namespace {

Vector utilities_from_z(const DgpSpec& spec, const Matrix& beta_sp, const Vector& z, Task task) {
  const Matrix& beta = task == Task::RP ? spec.beta_rp : beta_sp;
  Vector v = beta.col(0) + beta.rightCols(beta.cols() - 1) * z;
  if (spec.kind == DgpKind::Nonlinear) {
    const Matrix& nl = task == Task::RP ? spec.nonlinear_rp : spec.nonlinear_sp;
    v += nl.col(0) * (z[0] * z[0]) + nl.col(1) * (z[1] * z[1]) + nl.col(2) * (z[0] * z[1]);
  }
  return v;
}

Vector standard_from_raw(const DgpSpec& spec, const Vector& raw, Task task) {
  Vector z = (raw - spec.location).cwiseQuotient(spec.spread);
  if (task == Task::RP) {
    for (Index j : spec.schema.av_specific_indices()) z[j] = 0.0;
  }
  return z;
}

}  // namespace

Vector true_utilities(const DgpSpec& spec, const Vector& raw_x, Task task) {
  return utilities_from_z(spec, spec.effective_beta_sp(), standard_from_raw(spec, raw_x, task),
                          task);
}

Vector true_probabilities(const DgpSpec& spec, const Vector& raw_x, Task task) {
  const double scale = task == Task::SP ? spec.sp_noise_scale() : 1.0;
  return softmax_t(true_utilities(spec, raw_x, task), scale);
}

Dataset generate(const DgpSpec& spec, Index n_rp, Index n_sp, std::uint64_t seed) {
  spec.validate();
  if (n_rp <= 0 || n_sp <= 0) throw DomainError("generate needs positive n_rp and n_sp");
  const Index d = spec.schema.dim();
  const Index n = n_rp + n_sp;
  const Matrix beta_sp = spec.effective_beta_sp();
  const auto av = spec.schema.av_specific_indices();

  Rng rng(derive_seed(seed, spec.noise_seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix features(d, n);
  std::vector<Task> tasks;
  std::vector<Index> choices;
  tasks.reserve(static_cast<std::size_t>(n));
  choices.reserve(static_cast<std::size_t>(n));

  for (Index i = 0; i < n; ++i) {
    const Task task = i < n_rp ? Task::RP : Task::SP;
    Vector z(d);
    for (Index j = 0; j < d; ++j) z[j] = normal(rng);
    Vector raw = spec.location + spec.spread.cwiseProduct(z);
    if (task == Task::RP) {
      for (Index j : av) {
        z[j] = 0.0;
        raw[j] = 0.0;
      }
    }
    Vector utility = utilities_from_z(spec, beta_sp, z, task);
    const double noise_scale = task == Task::SP ? spec.sp_noise_scale() : 1.0;
    for (Index k = 0; k < utility.size(); ++k) utility[k] += noise_scale * draw_gumbel(rng);
    features.col(i) = raw;
    tasks.push_back(task);
    choices.push_back(argmax(utility));
  }
  return Dataset(spec.schema, std::move(features), std::move(tasks), std::move(choices));
}

FeatureSchema mode_choice_schema() {
  return FeatureSchema(
      {"age", "income", "walk_time", "transit_cost", "drive_cost", "av_cost", "av_wait",
       "av_ivt"},
      {"av_cost", "av_wait", "av_ivt"}, {"walk", "transit", "drive", "rideshare"},
      {"walk", "transit", "drive", "rideshare", "av"});
}

DgpSpec mode_choice_dgp(DgpKind kind, double theta) {
  DgpSpec spec;
  spec.kind = kind;
  spec.schema = mode_choice_schema();
  spec.theta = kind == DgpKind::ScaledNl ? theta : 1.0;
  // columns: asc, age, income, walk_time, transit_cost, drive_cost, av_cost, av_wait, av_ivt
  spec.beta_rp.resize(4, 9);
  spec.beta_rp << 0.3, 0.2, -0.3, -1.0, 0.4, 0.3, 0.0, 0.0, 0.0,  //
      0.5, 0.0, -0.4, 0.0, -0.8, 0.4, 0.0, 0.0, 0.0,              //
      0.2, 0.3, 0.8, 0.0, 0.3, -0.9, 0.0, 0.0, 0.0,               //
      0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  spec.beta_sp.resize(5, 9);
  spec.beta_sp.topRows(4) = spec.beta_rp;
  spec.beta_sp.row(4) << 0.2, -0.4, 0.3, 0.0, 0.0, 0.0, -1.0, -0.5, -0.8;
  if (kind == DgpKind::ScaledNl) {
    // SP intercepts and socio-economic effects differ; travel attributes are shared.
    spec.beta_sp.block(0, 0, 3, 3) << 0.6, 0.4, -0.2,  //
        0.1, 0.2, -0.6,                                //
        0.9, 0.1, 0.5;
    for (Index alt = 0; alt < 3; ++alt) {
      for (Index col = 3; col <= 5; ++col) spec.shared_map.emplace_back(alt, col);
    }
    // Travel attributes carry unit-scale coefficients so the scale is well identified.
    spec.beta_rp.block(0, 3, 3, 3) << -1.2, 0.6, 0.5,  //
        0.4, -1.1, 0.6,                                //
        0.3, 0.5, -1.3;
  }
  spec.location.resize(8);
  spec.location << 40.0, 5.0, 20.0, 2.0, 6.0, 8.0, 5.0, 15.0;
  spec.spread.resize(8);
  spec.spread << 12.0, 3.0, 8.0, 0.8, 2.0, 3.0, 2.0, 5.0;
  spec.nonlinear_rp = Matrix::Zero(4, 3);
  spec.nonlinear_sp = Matrix::Zero(5, 3);
  if (kind == DgpKind::Nonlinear) {
    // (age^2, income^2, age*income) per alternative
    spec.nonlinear_rp << -1.0, 0.0, 0.0,  //
        0.0, 0.0, 1.5,                    //
        0.0, -1.0, -1.5,                  //
        0.5, 0.5, 0.0;
    spec.nonlinear_sp.topRows(4) = spec.nonlinear_rp;
    spec.nonlinear_sp.row(4) << 0.0, 0.0, 1.0;
  }
  spec.validate();
  return spec;
}

DgpSpec two_feature_linear_dgp() {
  DgpSpec spec;
  spec.kind = DgpKind::LinearMnl;
  spec.schema = FeatureSchema({"x1", "x2"}, {}, {"a", "b", "c"}, {"a", "b", "c"});
  spec.beta_rp.resize(3, 3);
  spec.beta_rp << 0.0, 1.0, -0.5,  //
      0.0, -0.5, 1.0,              //
      0.0, 0.0, 0.0;
  spec.beta_sp = spec.beta_rp;
  spec.location = Vector::Zero(2);
  spec.spread = Vector::Ones(2);
  spec.nonlinear_rp = Matrix::Zero(3, 3);
  spec.nonlinear_sp = Matrix::Zero(3, 3);
  spec.validate();
  return spec;
}

}  // namespace mtlchoice

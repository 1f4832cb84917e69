#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mtlchoice/error.hpp"
#include "mtlchoice/interpret.hpp"
#include "mtlchoice/mnl.hpp"
#include "mtlchoice/synth.hpp"

using namespace mtlchoice;

namespace {

// softmax(W x) with a separate W per task.
class LinearLogit : public ChoiceModel {
 public:
  Matrix w_rp, w_sp;

  const Matrix& w(Task t) const { return t == Task::RP ? w_rp : w_sp; }
  Index num_alternatives(Task t) const override { return w(t).rows(); }
  Vector predict(const Vector& x, Task t) const override { return softmax_t(w(t) * x, 1.0); }
  Vector probability_gradient(const Vector& x, Task t, Index a) const override {
    const Vector p = predict(x, t);
    return p[a] * (w(t).row(a).transpose() - w(t).transpose() * p);
  }
};

struct Fixture {
  Dataset raw;
  Scaler scaler;
  Dataset standardized;
};

Fixture fixture(std::uint64_t seed = 1) {
  Fixture f;
  f.raw = generate(mode_choice_dgp(DgpKind::LinearMnl), 400, 400, seed);
  f.scaler = fit_scaler(f.raw);
  f.standardized = f.scaler.transform(f.raw);
  return f;
}

LinearLogit random_logit(std::uint64_t seed) {
  std::srand(static_cast<unsigned>(seed));
  LinearLogit m;
  m.w_rp = Matrix::Random(4, 8);
  m.w_sp = Matrix::Random(5, 8);
  m.w_rp.rightCols(3).setZero();
  return m;
}

std::vector<double> grid() { return {2.0, 4.0, 6.0, 8.0, 10.0}; }

double curve_value(const CurveTable& t, double g, Index alt, const std::string& id) {
  for (const auto& p : t.points) {
    if (p.grid_value == g && p.alternative == alt && p.model_id == id) return p.mean_probability;
  }
  ADD_FAILURE() << "missing point";
  return NAN;
}

}  // namespace

TEST(CurveSpec, Validation) {
  const FeatureSchema s = mode_choice_schema();
  EXPECT_NO_THROW((CurveSpec{"drive_cost", grid(), Task::RP, {}}.validate(s)));
  EXPECT_THROW((CurveSpec{"speed", grid(), Task::RP, {}}.validate(s)), InputError);
  EXPECT_THROW((CurveSpec{"av_cost", grid(), Task::RP, {}}.validate(s)), InputError);
  EXPECT_THROW((CurveSpec{"drive_cost", {}, Task::RP, {}}.validate(s)), InputError);
  EXPECT_THROW((CurveSpec{"drive_cost", {2.0, 1.0}, Task::RP, {}}.validate(s)), InputError);
  EXPECT_THROW((CurveSpec{"drive_cost", grid(), Task::RP, {"av"}}.validate(s)), InputError);
}

TEST(ProbCurve, FlatForIgnoredVariableAndOnSimplex) {
  const Fixture f = fixture();
  LinearLogit m = random_logit(3);
  const Index j = *f.raw.schema().feature_index("drive_cost");
  m.w_sp.col(j).setZero();
  const CurveTable t = prob_curve({{"m", &m}}, f.raw, f.scaler, {"drive_cost", grid(), Task::SP, {}});
  EXPECT_EQ(t.alternative_names, f.raw.schema().sp_alternatives());
  EXPECT_EQ(t.points.size(), 5u * 5u);
  for (double g : grid()) {
    double total = 0.0;
    for (Index a = 0; a < 5; ++a) {
      total += curve_value(t, g, a, "m");
      EXPECT_NEAR(curve_value(t, g, a, "m"), curve_value(t, 2.0, a, "m"), 1e-14);
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(ProbCurve, OwnCostLowersShare) {
  const Fixture f = fixture(2);
  const MnlSptModel m = fit_mnl_spt(f.standardized);
  const CurveTable t =
      prob_curve({{"mnl", &m}}, f.raw, f.scaler, {"drive_cost", grid(), Task::RP, {"drive"}});
  ASSERT_EQ(t.points.size(), 5u);
  for (std::size_t i = 1; i < t.points.size(); ++i) {
    EXPECT_LT(t.points[i].mean_probability, t.points[i - 1].mean_probability);
  }
}

TEST(ProbCurve, MeanCurveAveragesModels) {
  const Fixture f = fixture(3);
  const LinearLogit a = random_logit(4), b = random_logit(5);
  const CurveTable t =
      prob_curve({{"a", &a}, {"b", &b}}, f.raw, f.scaler, {"walk_time", grid(), Task::RP, {}});
  EXPECT_EQ(t.points.size(), 5u * 4u * 3u);
  for (double g : grid()) {
    for (Index k = 0; k < 4; ++k) {
      EXPECT_NEAR(curve_value(t, g, k, "mean"),
                  0.5 * (curve_value(t, g, k, "a") + curve_value(t, g, k, "b")), 1e-15);
    }
  }
}

TEST(Elasticity, MatchesFiniteDifferences) {
  const Fixture f = fixture(4);
  const LinearLogit m = random_logit(6);
  const ElasticitySpec spec{"transit_cost", "transit", Task::SP};
  const ElasticityResult r = elasticity(m, f.raw, f.scaler, spec);
  EXPECT_EQ(r.used_rows + r.excluded_rows, f.raw.count(Task::SP));
  const Index j = *f.raw.schema().feature_index("transit_cost");
  double sum = 0.0;
  Index n = 0;
  for (Index row : f.raw.indices(Task::SP)) {
    const Vector x = f.raw.x(row);
    const double p = m.predict(f.scaler.transform(x, Task::SP), Task::SP)[1];
    if (x[j] == 0.0 || p < 1e-6) continue;
    const double h = 1e-5;
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const double dp = (m.predict(f.scaler.transform(xp, Task::SP), Task::SP)[1] -
                       m.predict(f.scaler.transform(xm, Task::SP), Task::SP)[1]) /
                      (2 * h);
    sum += dp * x[j] / p;
    ++n;
  }
  EXPECT_EQ(n, r.used_rows);
  EXPECT_NEAR(r.mean, sum / static_cast<double>(n), 1e-6);
}

TEST(Elasticity, ZeroForIgnoredAndNegativeForOwnCost) {
  const Fixture f = fixture(5);
  LinearLogit m = random_logit(7);
  const Index j = *f.raw.schema().feature_index("age");
  m.w_rp.col(j).setZero();
  EXPECT_NEAR(elasticity(m, f.raw, f.scaler, {"age", "walk", Task::RP}).mean, 0.0, 1e-15);

  const MnlSptModel mnl = fit_mnl_spt(f.standardized);
  EXPECT_LT(elasticity(mnl, f.raw, f.scaler, {"drive_cost", "drive", Task::RP}).mean, 0.0);
  EXPECT_LT(elasticity(mnl, f.raw, f.scaler, {"av_cost", "av", Task::SP}).mean, 0.0);
}

TEST(Elasticity, ExcludesZeroInputs) {
  const Fixture f = fixture(6);
  const LinearLogit m = random_logit(8);
  const Index j = *f.raw.schema().feature_index("income");
  Matrix x = f.raw.features();
  const auto rp = f.raw.indices(Task::RP);
  for (std::size_t i = 0; i < 10; ++i) x(j, rp[i]) = 0.0;
  const Dataset some = f.raw.with_features(x);
  const ElasticityResult r = elasticity(m, some, f.scaler, {"income", "walk", Task::RP});
  EXPECT_EQ(r.excluded_rows, 10);
  EXPECT_EQ(r.used_rows, f.raw.count(Task::RP) - 10);

  for (Index row : rp) x(j, row) = 0.0;
  const Dataset none = f.raw.with_features(x);
  EXPECT_THROW(elasticity(m, none, f.scaler, {"income", "walk", Task::RP}), InputError);
}

TEST(Elasticity, RejectsUnknownNames) {
  const Fixture f = fixture(7);
  const LinearLogit m = random_logit(9);
  EXPECT_THROW(elasticity(m, f.raw, f.scaler, {"speed", "walk", Task::RP}), InputError);
  EXPECT_THROW(elasticity(m, f.raw, f.scaler, {"income", "boat", Task::RP}), InputError);
  EXPECT_THROW(elasticity(m, f.raw, f.scaler, {"av_cost", "walk", Task::RP}), InputError);
}

TEST(Writers, CurveAndElasticityCsv) {
  const Fixture f = fixture(8);
  const LinearLogit m = random_logit(10);
  const CurveTable t = prob_curve({{"m", &m}}, f.raw, f.scaler, {"age", {20.0, 30.0}, Task::RP, {"walk"}});
  std::ostringstream c;
  write_curve_csv(c, t, {"seed=1"});
  EXPECT_EQ(c.str().substr(0, 9), "# seed=1\n");
  EXPECT_NE(c.str().find("grid_value,alternative,model_id,mean_probability\n"), std::string::npos);
  EXPECT_NE(c.str().find("20,walk,m,"), std::string::npos);

  std::ostringstream e;
  write_elasticity_csv(e, {elasticity(m, f.raw, f.scaler, {"age", "walk", Task::RP})});
  EXPECT_EQ(e.str().substr(0, 56), "variable,alternative,task,elasticity,used_rows,excluded_");
  EXPECT_NE(e.str().find("age,walk,rp,"), std::string::npos);

  std::ostringstream svg;
  write_curve_svg(svg, t, "age");
  EXPECT_EQ(svg.str().substr(0, 4), "<svg");
}

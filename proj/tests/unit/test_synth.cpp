#include <gtest/gtest.h>

#include <cmath>

#include "mtlchoice/error.hpp"
#include "mtlchoice/synth.hpp"

using namespace mtlchoice;

namespace {

void expect_frequencies_match(const DgpSpec& spec, Task task, const Dataset& d, double tol) {
  const Index k = spec.schema.num_alternatives(task);
  Vector expected = Vector::Zero(k), observed = Vector::Zero(k);
  const auto rows = d.indices(task);
  for (Index i : rows) {
    expected += true_probabilities(spec, d.x(i), task);
    observed[d.choice(i)] += 1.0;
  }
  expected /= static_cast<double>(rows.size());
  observed /= static_cast<double>(rows.size());
  EXPECT_LT((expected - observed).cwiseAbs().maxCoeff(), tol) << to_string(spec.kind) << " " << to_string(task);
}

}  // namespace

TEST(Generate, ZeroCoefficientsGiveUniformShares) {
  DgpSpec spec = two_feature_linear_dgp();
  spec.beta_rp.setZero();
  spec.beta_sp.setZero();
  const Dataset d = generate(spec, 10000, 1, 1).only(Task::RP);
  Vector counts = Vector::Zero(3);
  for (Index i = 0; i < d.size(); ++i) counts[d.choice(i)] += 1;
  const double sigma = std::sqrt(10000 * (1.0 / 3) * (2.0 / 3));
  for (Index k = 0; k < 3; ++k) EXPECT_LT(std::abs(counts[k] - 10000.0 / 3), 3 * sigma);
}

TEST(Generate, Deterministic) {
  const DgpSpec spec = mode_choice_dgp(DgpKind::Nonlinear);
  const Dataset a = generate(spec, 100, 200, 5), b = generate(spec, 100, 200, 5), c = generate(spec, 100, 200, 6);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_EQ(a.choices(), b.choices());
  EXPECT_NE(a.features(), c.features());
}

TEST(Generate, RpRowsHaveZeroSpOnlyFeatures) {
  for (DgpKind kind : {DgpKind::LinearMnl, DgpKind::ScaledNl, DgpKind::Nonlinear}) {
    const Dataset d = generate(mode_choice_dgp(kind), 200, 200, 3);
    for (Index i : d.indices(Task::RP))
      for (Index j : d.schema().av_specific_indices()) EXPECT_EQ(d.x(i)[j], 0.0);
    for (Index i : d.indices(Task::SP)) EXPECT_NE(d.x(i)[d.schema().av_specific_indices()[0]], 0.0);
  }
}

TEST(Generate, FrequenciesConvergeToLogitProbabilities) {
  for (DgpKind kind : {DgpKind::LinearMnl, DgpKind::ScaledNl, DgpKind::Nonlinear}) {
    const DgpSpec spec = mode_choice_dgp(kind);
    const Dataset d = generate(spec, 100000, 100000, 7);
    expect_frequencies_match(spec, Task::RP, d, 0.01);
    expect_frequencies_match(spec, Task::SP, d, 0.01);
  }
}

TEST(Generate, ScaledNoiseFlattensSpChoices) {
  DgpSpec spec = mode_choice_dgp(DgpKind::ScaledNl, 2.0);
  const Vector x = spec.location;
  const Vector sharp = true_probabilities(spec, x, Task::SP);
  spec.theta = 1.0;
  const Vector base = true_probabilities(spec, x, Task::SP);
  EXPECT_LT(sharp.maxCoeff(), base.maxCoeff());
}

TEST(DgpSpec, Validation) {
  DgpSpec spec = mode_choice_dgp(DgpKind::ScaledNl);
  spec.theta = 0.0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = mode_choice_dgp(DgpKind::ScaledNl);
  spec.shared_map.push_back({9, 0});
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = mode_choice_dgp(DgpKind::ScaledNl);
  const Matrix eff = spec.effective_beta_sp();
  for (auto [a, c] : spec.shared_map) EXPECT_EQ(eff(a, c), spec.beta_rp(a, c));
}

#include <gtest/gtest.h>

#include <filesystem>

#include "mtlchoice/error.hpp"
#include "mtlchoice/serialization.hpp"

using namespace mtlchoice;

namespace {

Dataset data(std::uint64_t seed) {
  const Dataset raw = generate(mode_choice_dgp(DgpKind::ScaledNl), 300, 300, seed);
  return standardize(raw, raw).train;
}

template <class M>
void expect_same_predictions(const ChoiceModel& a, const M& b, const Dataset& d) {
  for (Index row = 0; row < d.size(); row += 37) {
    EXPECT_EQ(a.predict(d.x(row), d.task(row)), b.predict(d.x(row), d.task(row)));
  }
}

}  // namespace

TEST(Hex, RoundTrip) {
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
  EXPECT_EQ(parse_hex64(hex64(0xfedcba9876543210ULL)), 0xfedcba9876543210ULL);
  EXPECT_THROW(parse_hex64("xyz"), Error);
}

TEST(ModelKindNames, RoundTrip) {
  for (auto k : {ModelKind::Mtldnn, ModelKind::DnnSpt, ModelKind::DnnJoint, ModelKind::NlC,
                 ModelKind::NlNc, ModelKind::MnlSpt, ModelKind::MnlJoint}) {
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_model_kind("svm"), ConfigError);
}

TEST(Json, MatrixIsColumnMajorAndExact) {
  Matrix m(2, 3);
  m << 1.0 / 3.0, 2, 3, 4, 5, 1e-300;
  const Json j = to_json(m);
  EXPECT_EQ(j["data"][1].get<double>(), 4.0);
  EXPECT_EQ(matrix_from_json(Json::parse(j.dump())), m);
  Json bad = j;
  bad["cols"] = 4;
  EXPECT_THROW(matrix_from_json(bad), Error);
}

TEST(Json, SchemaScalerAndDgp) {
  const Dataset d = generate(mode_choice_dgp(DgpKind::Nonlinear), 50, 50, 1);
  const FeatureSchema s = d.schema();
  EXPECT_EQ(schema_from_json(to_json(s)), s);
  const Scaler sc = fit_scaler(d);
  const Scaler back = scaler_from_json(Json::parse(to_json(sc).dump()), s);
  EXPECT_EQ(back.mean(), sc.mean());
  EXPECT_EQ(back.sd(), sc.sd());
  const DgpSpec spec = mode_choice_dgp(DgpKind::ScaledNl, 1.7);
  const DgpSpec spec2 = dgp_from_json(Json::parse(to_json(spec).dump()));
  EXPECT_EQ(spec2.beta_sp, spec.beta_sp);
  EXPECT_EQ(spec2.theta, 1.7);
  EXPECT_EQ(spec2.shared_map, spec.shared_map);
}

TEST(Json, HyperAndSpaceRejectUnknownFields) {
  HyperConfig h;
  h.width = 77;
  h.lambda3 = 0.25;
  h.seed = 123456789012345ULL;
  EXPECT_EQ(hyper_from_json(to_json(h)), h);
  EXPECT_EQ(hyper_from_json(Json{{"width", 9}}).width, 9);
  EXPECT_THROW(hyper_from_json(Json{{"widht", 9}}), ConfigError);
  EXPECT_EQ(search_space_from_json(to_json(SearchSpace::desk())), SearchSpace::desk());
  EXPECT_THROW(search_space_from_json(Json{{"depth", {1}}}), ConfigError);
}

TEST(Json, ModelsRoundTripBitExact) {
  const Dataset d = data(2);
  const MnlModel joint = fit_mnl(d, Scope::Joint);
  expect_same_predictions(joint, mnl_from_json(Json::parse(to_json(joint).dump())), d);
  const MnlSptModel spt = fit_mnl_spt(d);
  expect_same_predictions(spt, mnl_spt_from_json(Json::parse(to_json(spt).dump())), d);
  const std::vector<CoefficientTie> ties{{"walk_time", "walk"}, {"drive_cost", "drive"}};
  const NlModel nl = fit_nl(d, ties);
  const NlModel nl2 = nl_from_json(Json::parse(to_json(nl).dump()));
  EXPECT_EQ(nl2.log_theta, nl.log_theta);
  EXPECT_EQ(nl2.ties, nl.ties);
  expect_same_predictions(nl, nl2, d);

  HyperConfig h;
  h.shared_depth = 1;
  h.task_depth = 2;
  h.width = 10;
  h.n_iter = 50;
  const auto& s = d.schema();
  const MtldnnModel m = train(build(h, s.dim(), 4, 5, s.av_specific_indices()), d).model;
  const MtldnnModel m2 = mtldnn_from_json(Json::parse(to_json(m).dump()));
  EXPECT_EQ(flatten(m2.params), flatten(m.params));
  EXPECT_EQ(m2.hyper, m.hyper);
  expect_same_predictions(m, m2, d);
}

TEST(ModelFileJson, SchemaHashGuards) {
  const Dataset d = data(3);
  ModelFile f;
  f.kind = ModelKind::MnlSpt;
  f.schema = d.schema();
  f.scaler = Scaler::identity(d.schema());
  f.model = std::make_shared<MnlSptModel>(fit_mnl_spt(d));
  f.config_hash = hex64(42);
  f.seed = 5;
  const auto path = std::filesystem::temp_directory_path() / "mtlchoice_model_file_test.json";
  save_json(path, to_json(f));
  const ModelFile back = model_file_from_json(load_json(path));
  std::filesystem::remove(path);
  EXPECT_EQ(back.kind, ModelKind::MnlSpt);
  EXPECT_EQ(back.seed, 5u);
  EXPECT_EQ(back.config_hash, f.config_hash);
  expect_same_predictions(*f.model, *back.model, d);

  Json tampered = to_json(f);
  tampered["schema"]["rp_alternatives"][0] = "stroll";
  EXPECT_THROW(model_file_from_json(tampered), Error);
  Json extra = to_json(f);
  extra["comment"] = "x";
  EXPECT_THROW(model_file_from_json(extra), Error);
}

TEST(LoadJson, ReportsMissingFile) {
  EXPECT_THROW(load_json("/nonexistent/dir/file.json"), Error);
}

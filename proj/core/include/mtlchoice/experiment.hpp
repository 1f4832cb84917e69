#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtlchoice/interpret.hpp"
#include "mtlchoice/serialization.hpp"

namespace mtlchoice {

/// Simulated data: a named preset or a full DGP description.
struct SynthSource {
  std::string preset;  // linear_mnl | scaled_nl | nonlinear | two_feature
  double theta = 2.0;
  std::optional<DgpSpec> spec;
  Index n_rp = 1000;
  Index n_sp = 1000;

  DgpSpec resolve() const;
};

struct CsvSource {
  std::filesystem::path path;
  FeatureSchema schema;
};

struct SearchSettings {
  SearchSpace space = SearchSpace::desk();
  int draws = 20;
  Selection selection = Selection::TestRisk;
  int workers = 1;
  std::size_t top_k = 10;
  /// > 0 carves a validation set out of the training split for selection;
  /// the test split is then reported as a separate holdout.
  double validation_ratio = 0.0;
};

struct InterpretSettings {
  std::vector<CurveSpec> curves;
  std::vector<ElasticitySpec> elasticities;
  std::string rows = "all";  // all | train | test
};

struct ExperimentConfig {
  std::optional<SynthSource> synth;
  std::optional<CsvSource> csv;
  double split_ratio = 0.7;
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::Mtldnn;
  HyperConfig hyper;
  SearchSettings search;
  std::vector<CoefficientTie> ties;
  FeatureMap feature_map = FeatureMap::Identity;
  FitOptions fit;
  InterpretSettings interpret;
  std::filesystem::path output_dir;
  /// Hash of the canonical config text, output_dir excluded.
  std::string hash;

  std::uint64_t split_seed() const;
  std::uint64_t search_seed() const;
};

/// Parses and validates. Relative paths resolve against `base_dir`. Error
/// messages name the offending field.
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct PreparedData {
  Dataset raw;  // every row
  Dataset raw_train;
  Dataset raw_test;
  Standardized standardized;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Fits one estimator of `kind` on standardized training data.
std::shared_ptr<const ChoiceModel> fit_model(ModelKind kind, const ExperimentConfig& config,
                                             const Dataset& train,
                                             std::vector<std::string>* warnings = nullptr);

/// Joint/RP/SP x train/test accuracies for the seven estimators plus the
/// top-k ensemble of the MTLDNN search.
struct CompareTable {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> values;  // [row][column]
};

CompareTable compare_models(const ExperimentConfig& config, const PreparedData& data);

struct RunOptions {
  std::filesystem::path out;                  // overrides config.output_dir
  std::vector<std::filesystem::path> models;  // evaluate / interpret inputs
  std::filesystem::path report;               // ensemble / interpret input
  std::optional<std::size_t> k;
};

/// Executes one subcommand and returns the artifacts written.
std::vector<std::filesystem::path> run_command(const std::string& command,
                                               const ExperimentConfig& config,
                                               const RunOptions& options,
                                               std::ostream& log);

/// Reruns `command` into a scratch directory and compares every artifact
/// byte for byte. Returns the names of files that differ.
std::vector<std::string> verify_command(const std::string& command,
                                        const ExperimentConfig& config,
                                        const RunOptions& options,
                                        const std::vector<std::filesystem::path>& artifacts,
                                        std::ostream& log);

std::filesystem::path default_output_dir();

}  // namespace mtlchoice

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtlchoice/linalg.hpp"
#include "mtlchoice/task.hpp"

namespace mtlchoice {

/// Names of the input features and of the alternatives in each task.
///
/// RP and SP share one input dimension. Features listed in `av_specific`
/// exist only in SP and are held at zero on RP rows. SP alternatives start
/// with the RP alternatives in the same order and append SP-only ones.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<std::string> names, std::vector<std::string> av_specific,
                std::vector<std::string> rp_alternatives,
                std::vector<std::string> sp_alternatives);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& av_specific() const { return av_specific_; }
  const std::vector<std::string>& rp_alternatives() const { return rp_alternatives_; }
  const std::vector<std::string>& sp_alternatives() const { return sp_alternatives_; }
  const std::vector<std::string>& alternatives(Task task) const {
    return task == Task::RP ? rp_alternatives_ : sp_alternatives_;
  }

  Index dim() const { return static_cast<Index>(names_.size()); }
  Index num_rp_alternatives() const { return static_cast<Index>(rp_alternatives_.size()); }
  Index num_sp_alternatives() const { return static_cast<Index>(sp_alternatives_.size()); }
  Index num_alternatives(Task task) const {
    return task == Task::RP ? num_rp_alternatives() : num_sp_alternatives();
  }

  std::optional<Index> feature_index(std::string_view name) const;
  std::optional<Index> alternative_index(std::string_view name, Task task) const;
  bool is_av_specific(Index feature) const { return av_mask_[static_cast<std::size_t>(feature)]; }
  /// Column indices of SP-only features, ascending.
  std::vector<Index> av_specific_indices() const;

  /// Stable hash over names, SP-only markers and alternatives.
  std::uint64_t hash() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::string> av_specific_;
  std::vector<std::string> rp_alternatives_;
  std::vector<std::string> sp_alternatives_;
  std::vector<bool> av_mask_;
};

/// Task-tagged table of choice observations. Immutable once constructed; the
/// constructor rejects any row that breaks the label range or the
/// zero-SP-only-feature rule for RP rows.
class Dataset {
 public:
  Dataset() = default;
  /// `features` is dim x N, one column per observation.
  Dataset(FeatureSchema schema, Matrix features, std::vector<Task> tasks,
          std::vector<Index> choices);

  const FeatureSchema& schema() const { return schema_; }
  Index size() const { return static_cast<Index>(tasks_.size()); }
  bool empty() const { return tasks_.empty(); }
  Index count(Task task) const;
  Index num_alternatives(Task task) const { return schema_.num_alternatives(task); }

  const Matrix& features() const { return features_; }
  auto x(Index row) const { return features_.col(row); }
  Task task(Index row) const { return tasks_[static_cast<std::size_t>(row)]; }
  Index choice(Index row) const { return choices_[static_cast<std::size_t>(row)]; }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<Index>& choices() const { return choices_; }

  /// Row indices belonging to `task`, ascending.
  std::vector<Index> indices(Task task) const;
  Dataset subset(std::span<const Index> rows) const;
  Dataset only(Task task) const;
  /// Same rows and labels with replaced features (re-validated).
  Dataset with_features(Matrix features) const;

 private:
  FeatureSchema schema_;
  Matrix features_;
  std::vector<Task> tasks_;
  std::vector<Index> choices_;
};

/// Reads `task,choice,<features...>`. Lines starting with '#' are comments.
Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema);
Dataset read_csv(std::istream& in, const FeatureSchema& schema);

/// Writes the CSV form; every entry of `comments` becomes a leading '# ' line.
void write_csv(std::ostream& out, const Dataset& data,
               std::span<const std::string> comments = {});

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Stratified by task: each task is shuffled with a seed-derived stream and
/// round(ratio * n_task) rows go to train.
TrainTestSplit split(const Dataset& data, double ratio, std::uint64_t seed);

/// Per-feature affine standardization fitted on training data. SP-only
/// features use SP rows for their statistics and stay zero on RP rows.
class Scaler {
 public:
  Scaler() = default;
  Scaler(FeatureSchema schema, Vector mean, Vector sd, std::vector<bool> scaled);

  Vector transform(const Vector& raw, Task task) const;
  Vector inverse(const Vector& standardized, Task task) const;
  Dataset transform(const Dataset& raw) const;
  Dataset inverse(const Dataset& standardized) const;

  /// d(standardized_j) / d(raw_j).
  double derivative(Index feature) const;

  const FeatureSchema& schema() const { return schema_; }
  const Vector& mean() const { return mean_; }
  const Vector& sd() const { return sd_; }
  const std::vector<bool>& scaled() const { return scaled_; }

  static Scaler identity(const FeatureSchema& schema);

 private:
  FeatureSchema schema_;
  Vector mean_;
  Vector sd_;
  std::vector<bool> scaled_;
};

struct Standardized {
  Dataset train;
  Dataset test;
  Scaler scaler;
  std::vector<std::string> warnings;
};

Scaler fit_scaler(const Dataset& train, std::vector<std::string>* warnings = nullptr);
Standardized standardize(const Dataset& train, const Dataset& test);

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(std::span<const Vector> probabilities, std::span<const Index> labels);

}  // namespace mtlchoice

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtlchoice/mtldnn.hpp"
#include "mtlchoice/rng.hpp"

namespace mtlchoice {

/// Value lists per hyperparameter dimension. Fixed fields are copied verbatim
/// into every sampled config.
struct SearchSpace {
  std::vector<int> shared_depth{1, 2, 3, 4, 5};
  std::vector<int> task_depth{1, 2, 3, 4, 5};
  std::vector<int> width{25, 50, 100, 200};
  std::vector<double> lambda1{1e-20, 1e-4, 1e-2, 5e-1};
  std::vector<double> lambda2{1e-20, 1e-4, 1e-2, 5e-1};
  std::vector<double> lambda3{1e-20, 1e-4, 1e-2, 5e-1};
  int n_iter = 20000;
  int batch = 200;
  double learning_rate = 1e-3;

  /// Full-scale space.
  static SearchSpace standard();
  /// Shallower, narrower, shorter runs for single-core machines.
  static SearchSpace desk();

  void validate() const;
  bool contains(const HyperConfig& hyper) const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

/// One independent uniform draw per dimension. The seed field is left at 0.
HyperConfig sample(const SearchSpace& space, Rng& rng);

enum class Selection { TestRisk, TestJointAccuracy };

std::string to_string(Selection selection);
Selection parse_selection(std::string_view text);

struct SearchOptions {
  int draws = 20;
  Selection selection = Selection::TestRisk;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct SearchEntry {
  std::size_t draw = 0;
  HyperConfig hyper;
  bool failed = false;
  std::string failure;
  /// train = fitting rows, test = selection rows
  Metrics metrics;
  /// Metrics on an extra held-out set, when one was supplied.
  std::optional<TaskMetrics> holdout;
  LossBreakdown final_loss;
  std::shared_ptr<const MtldnnModel> model;
  std::string model_path;
};

struct SearchResult {
  Selection selection = Selection::TestRisk;
  /// Every draw, in draw order.
  std::vector<SearchEntry> entries;
  /// Indices into `entries` of successful runs, best first.
  std::vector<std::size_t> ranking;

  const SearchEntry& ranked(std::size_t position) const;
  std::size_t successful() const { return ranking.size(); }
};

/// Trains options.draws sampled configs on `train` and ranks them on
/// `select`. Run i trains with seed derive_seed(options.seed, i + 1). The
/// result does not depend on options.workers.
SearchResult random_search(const SearchSpace& space, const Dataset& train, const Dataset& select,
                           const SearchOptions& options, const Dataset* holdout = nullptr);

/// Ranks entries (successful ones only) by the selection criterion; ties keep
/// draw order.
std::vector<std::size_t> rank_entries(const std::vector<SearchEntry>& entries,
                                      Selection selection);

/// Unweighted mean of member probability vectors.
class EnsembleModel : public ChoiceModel {
 public:
  explicit EnsembleModel(std::vector<std::shared_ptr<const ChoiceModel>> members);

  const std::vector<std::shared_ptr<const ChoiceModel>>& members() const { return members_; }

  Index num_alternatives(Task task) const override;
  Vector predict(const Vector& x, Task task) const override;
  Vector probability_gradient(const Vector& x, Task task, Index alternative) const override;
  Matrix predict_columns(const Matrix& inputs, Task task) const override;

 private:
  std::vector<std::shared_ptr<const ChoiceModel>> members_;
};

struct EnsembleResult {
  std::shared_ptr<const EnsembleModel> model;
  Metrics metrics;
};

EnsembleResult ensemble_topk(const SearchResult& result, std::size_t k, const Dataset& train,
                             const Dataset& test);

/// One CSV row per draw: config fields, metrics and status.
void write_search_report(std::ostream& out, const SearchResult& result,
                         const std::vector<std::string>& comments = {});
std::string search_summary(const SearchResult& result);

}  // namespace mtlchoice

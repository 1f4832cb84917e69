#pragma once

#include <cstdint>
#include <vector>

#include "mtlchoice/choice_model.hpp"
#include "mtlchoice/network.hpp"

namespace mtlchoice {

/// One point of the MTLDNN hyperparameter space.
///
/// task_depth == 0 gives the pooled DNN-JOINT network (a single K_s-way head
/// on top of `shared_depth` layers). shared_depth == 0 with lambda3 == 0
/// decouples into two independent per-task networks (DNN-SPT).
struct HyperConfig {
  int shared_depth = 3;  // M1
  int task_depth = 2;    // M2
  int width = 25;
  double lambda0 = 1.0;
  double lambda1 = 1e-2;
  double lambda2 = 1e-4;
  double lambda3 = 1e-20;
  int n_iter = 20000;
  int batch = 200;  // rows drawn from each task per step
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool mask_rp = false;  // pooled model only: renormalize RP predictions over K_r

  void validate() const;
  bool is_joint() const { return task_depth == 0; }

  friend bool operator==(const HyperConfig&, const HyperConfig&) = default;
};

/// Same total depth, all layers task-specific, no similarity penalty.
HyperConfig as_dnn_spt(HyperConfig hyper);
/// Same total depth, all layers shared, single pooled head.
HyperConfig as_dnn_joint(HyperConfig hyper);

/// Multitask network with shared layers, RP/SP heads and a learned SP
/// temperature T = exp(log T).
///
/// Similarity penalty alignment: hidden head layers are matched elementwise;
/// in the output layer the first K_r SP rows are matched with the K_r RP rows
/// (SP-only alternatives are excluded). When the heads read raw inputs
/// (shared_depth == 0) the SP-only input columns of the first head layer are
/// excluded as well. Biases are never penalized.
class MtldnnModel : public ChoiceModel {
 public:
  NetworkParams params;
  HyperConfig hyper;
  Index input_dim = 0;
  Index num_rp = 0;
  Index num_sp = 0;
  std::vector<Index> sp_only_inputs;

  LossSpec loss_spec() const;
  double temperature() const { return params.is_joint() ? 1.0 : params.temperature(); }
  Vector utilities(const Vector& x, Task task) const;

  Index num_alternatives(Task task) const override;
  Vector predict(const Vector& x, Task task) const override;
  Vector probability_gradient(const Vector& x, Task task, Index alternative) const override;
  Matrix predict_columns(const Matrix& inputs, Task task) const override;
};

/// He-style initialization (weights ~ N(0, 2 / in_dim), zero biases, T = 1).
/// Shared layers, RP head and SP head draw from separate seed-derived streams.
MtldnnModel build(const HyperConfig& hyper, Index input_dim, Index num_rp, Index num_sp,
                  std::vector<Index> sp_only_inputs = {});

/// Gathers dataset rows into a Batch.
Batch make_batch(const Dataset& data, std::span<const Index> rp_rows,
                 std::span<const Index> sp_rows);

/// Regularized multitask risk on the given batches (empty batches are omitted).
LossBreakdown loss(const MtldnnModel& model, const Batch& batch);

struct HistoryPoint {
  long iteration = 0;
  LossBreakdown batch_loss;
  double trailing_mean_total = 0.0;  // mean total loss over the last <= 100 steps
};

struct TrainResult {
  MtldnnModel model;
  std::vector<HistoryPoint> history;
};

/// Runs hyper.n_iter Adam steps. Each step draws hyper.batch rows uniformly
/// with replacement from each non-empty task pool (separate seed-derived
/// streams per task). Returns the final iterate.
TrainResult train(MtldnnModel model, const Dataset& data);

Vector predict(const MtldnnModel& model, const Vector& x, Task task);

}  // namespace mtlchoice

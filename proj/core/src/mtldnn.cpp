#include "mtlchoice/mtldnn.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <string>

#include "mtlchoice/error.hpp"
#include "mtlchoice/optim.hpp"
#include "mtlchoice/rng.hpp"

namespace mtlchoice {

namespace {

constexpr int kMaxDepth = 5;
constexpr long kHistoryInterval = 100;

enum Stream : std::uint64_t {
  kSharedInit = 1,
  kRpHeadInit = 2,
  kSpHeadInit = 3,
  kRpBatches = 11,
  kSpBatches = 12,
};

DenseLayer he_layer(Index in, Index out, Activation activation, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
  DenseLayer layer;
  layer.weights.resize(out, in);
  // column-major fill keeps the draw order independent of Eigen internals
  for (Index c = 0; c < in; ++c) {
    for (Index r = 0; r < out; ++r) layer.weights(r, c) = normal(rng);
  }
  layer.bias = Vector::Zero(out);
  layer.activation = activation;
  return layer;
}

LayerStack make_stack(Index in, int hidden_layers, Index width, Index out, bool linear_output,
                      Rng& rng) {
  LayerStack stack;
  Index current = in;
  for (int l = 0; l < hidden_layers; ++l) {
    stack.push_back(he_layer(current, width, Activation::ReLU, rng));
    current = width;
  }
  if (linear_output) stack.push_back(he_layer(current, out, Activation::Linear, rng));
  return stack;
}

const char* first_non_finite(const LossBreakdown& l) {
  if (!std::isfinite(l.rp_risk)) return "rp_risk";
  if (!std::isfinite(l.sp_risk)) return "sp_risk";
  if (!std::isfinite(l.shared_penalty)) return "shared_penalty";
  if (!std::isfinite(l.sp_penalty)) return "sp_penalty";
  if (!std::isfinite(l.similarity_penalty)) return "similarity_penalty";
  if (!std::isfinite(l.total)) return "total";
  return nullptr;
}

}  // namespace

void HyperConfig::validate() const {
  if (shared_depth < 0 || shared_depth > kMaxDepth || task_depth < 0 || task_depth > kMaxDepth) {
    throw ConfigError("shared_depth and task_depth must lie in [0, 5]");
  }
  if (shared_depth + task_depth < 1) {
    throw ConfigError("shared_depth + task_depth must be at least 1");
  }
  if (width < 1) throw ConfigError("width must be positive");
  if (lambda0 != 1.0) throw ConfigError("lambda0 is fixed at 1");
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0 || !std::isfinite(lambda1) ||
      !std::isfinite(lambda2) || !std::isfinite(lambda3)) {
    throw ConfigError("lambda1, lambda2 and lambda3 must be finite and non-negative");
  }
  if (n_iter < 0) throw ConfigError("n_iter must be non-negative");
  if (batch < 1) throw ConfigError("batch must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (mask_rp && !is_joint()) throw ConfigError("mask_rp applies only to the pooled network");
}

HyperConfig as_dnn_spt(HyperConfig hyper) {
  hyper.task_depth += hyper.shared_depth;
  hyper.shared_depth = 0;
  hyper.lambda3 = 0.0;
  return hyper;
}

HyperConfig as_dnn_joint(HyperConfig hyper) {
  hyper.shared_depth += hyper.task_depth;
  hyper.task_depth = 0;
  return hyper;
}

MtldnnModel build(const HyperConfig& hyper, Index input_dim, Index num_rp, Index num_sp,
                  std::vector<Index> sp_only_inputs) {
  hyper.validate();
  if (input_dim < 1 || num_rp < 1 || num_sp < 1) throw ConfigError("dimensions must be positive");
  MtldnnModel model;
  model.hyper = hyper;
  model.input_dim = input_dim;
  model.num_rp = num_rp;
  model.num_sp = num_sp;
  model.sp_only_inputs = std::move(sp_only_inputs);

  Rng shared_rng(derive_seed(hyper.seed, kSharedInit));
  if (hyper.is_joint()) {
    model.params.shared =
        make_stack(input_dim, hyper.shared_depth - 1, hyper.width, num_sp, true, shared_rng);
  } else {
    model.params.shared =
        make_stack(input_dim, hyper.shared_depth, hyper.width, 0, false, shared_rng);
    const Index head_in = hyper.shared_depth > 0 ? hyper.width : input_dim;
    Rng rp_rng(derive_seed(hyper.seed, kRpHeadInit));
    Rng sp_rng(derive_seed(hyper.seed, kSpHeadInit));
    model.params.rp_head =
        make_stack(head_in, hyper.task_depth - 1, hyper.width, num_rp, true, rp_rng);
    model.params.sp_head =
        make_stack(head_in, hyper.task_depth - 1, hyper.width, num_sp, true, sp_rng);
  }
  model.params.log_temperature = 0.0;
  return model;
}

LossSpec MtldnnModel::loss_spec() const {
  LossSpec spec;
  spec.lambda0 = hyper.lambda0;
  spec.lambda1 = hyper.lambda1;
  spec.lambda2 = hyper.lambda2;
  spec.lambda3 = hyper.lambda3;
  spec.learn_temperature = !params.is_joint();
  spec.similarity_excluded_inputs = sp_only_inputs;
  return spec;
}

Vector MtldnnModel::utilities(const Vector& x, Task task) const {
  Matrix out = forward_stack(Matrix(x), params.shared);
  if (!params.is_joint()) {
    out = forward_stack(out, task == Task::RP ? params.rp_head : params.sp_head);
  }
  return out.col(0);
}

Index MtldnnModel::num_alternatives(Task task) const {
  if (task == Task::SP) return num_sp;
  if (params.is_joint() && !hyper.mask_rp) return num_sp;
  return num_rp;
}

Matrix MtldnnModel::predict_columns(const Matrix& inputs, Task task) const {
  Matrix v = forward_stack(inputs, params.shared);
  if (params.is_joint()) {
    if (task == Task::RP && hyper.mask_rp) return softmax_columns(v.topRows(num_rp));
    return softmax_columns(v);
  }
  if (task == Task::RP) return softmax_columns(forward_stack(v, params.rp_head));
  return softmax_columns(forward_stack(v, params.sp_head), params.temperature());
}

Vector MtldnnModel::predict(const Vector& x, Task task) const {
  return predict_columns(Matrix(x), task).col(0);
}

Vector MtldnnModel::probability_gradient(const Vector& x, Task task, Index alternative) const {
  StackCache shared_cache, head_cache;
  Matrix hidden = forward_cached(Matrix(x), params.shared, shared_cache);
  const LayerStack* head = nullptr;
  Matrix v = hidden;
  if (!params.is_joint()) {
    head = task == Task::RP ? &params.rp_head : &params.sp_head;
    v = forward_cached(hidden, *head, head_cache);
  }
  const Index k = num_alternatives(task);
  if (alternative < 0 || alternative >= k) throw InputError("alternative out of range");
  const double t = (task == Task::SP && !params.is_joint()) ? params.temperature() : 1.0;
  const Vector p = softmax_t(v.col(0).head(k), t);
  Matrix dv = Matrix::Zero(v.rows(), 1);
  dv.col(0).head(k) = softmax_component_gradient(p, alternative, t);
  if (head) dv = backward_cached(*head, head_cache, dv, {});
  return backward_cached(params.shared, shared_cache, dv, {}).col(0);
}

Vector predict(const MtldnnModel& model, const Vector& x, Task task) {
  return model.predict(x, task);
}

Batch make_batch(const Dataset& data, std::span<const Index> rp_rows,
                 std::span<const Index> sp_rows) {
  Batch batch;
  auto fill = [&](std::span<const Index> rows, Matrix& inputs, std::vector<Index>& labels) {
    inputs.resize(data.features().rows(), static_cast<Index>(rows.size()));
    labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      inputs.col(static_cast<Index>(i)) = data.x(rows[i]);
      labels[i] = data.choice(rows[i]);
    }
  };
  fill(rp_rows, batch.rp_inputs, batch.rp_labels);
  fill(sp_rows, batch.sp_inputs, batch.sp_labels);
  return batch;
}

LossBreakdown loss(const MtldnnModel& model, const Batch& batch) {
  return evaluate_loss(model.params, batch, model.loss_spec());
}

TrainResult train(MtldnnModel model, const Dataset& data) {
  const HyperConfig& hyper = model.hyper;
  hyper.validate();
  if (data.features().rows() != model.input_dim) {
    throw ShapeError("training data dimension does not match the model");
  }
  const auto rp_pool = data.indices(Task::RP);
  const auto sp_pool = data.indices(Task::SP);
  if (rp_pool.empty() && sp_pool.empty()) throw InputError("training data is empty");

  const LossSpec spec = model.loss_spec();
  Rng rp_rng(derive_seed(hyper.seed, kRpBatches));
  Rng sp_rng(derive_seed(hyper.seed, kSpBatches));
  auto draw = [&](const std::vector<Index>& pool, Rng& rng, std::vector<Index>& out) {
    out.clear();
    if (pool.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int b = 0; b < hyper.batch; ++b) out.push_back(pool[pick(rng)]);
  };

  Vector flat = flatten(model.params);
  Adam adam(flat.size(), AdamConfig{hyper.learning_rate});
  std::deque<double> window;
  double window_sum = 0.0;
  std::vector<Index> rp_rows, sp_rows;
  TrainResult result;

  for (long it = 0; it < hyper.n_iter; ++it) {
    draw(rp_pool, rp_rng, rp_rows);
    draw(sp_pool, sp_rng, sp_rows);
    const Batch batch = make_batch(data, rp_rows, sp_rows);
    auto [step_loss, tape] = backward(model.params, batch, spec);
    if (const char* bad = first_non_finite(step_loss)) {
      throw TrainingError("non-finite " + std::string(bad) + " at iteration " +
                              std::to_string(it),
                          it, bad);
    }
    window.push_back(step_loss.total);
    window_sum += step_loss.total;
    if (window.size() > static_cast<std::size_t>(kHistoryInterval)) {
      window_sum -= window.front();
      window.pop_front();
    }
    if (it % kHistoryInterval == 0 || it + 1 == hyper.n_iter) {
      result.history.push_back({it, step_loss, window_sum / static_cast<double>(window.size())});
    }
    adam.step(flat, flatten(tape));
    if (!flat.allFinite()) {
      throw TrainingError("non-finite parameters after iteration " + std::to_string(it), it,
                          "parameters");
    }
    assign_flat(model.params, flat);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace mtlchoice

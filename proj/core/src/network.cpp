#include "mtlchoice/network.hpp"

#include <cmath>
#include <string>

#include "mtlchoice/error.hpp"

namespace mtlchoice {

double NetworkParams::temperature() const { return std::exp(log_temperature); }

GradientTape GradientTape::zeros_like(const NetworkParams& params) {
  GradientTape tape;
  for (const auto& l : params.shared) tape.shared.push_back(LayerGradient::zeros_like(l));
  for (const auto& l : params.rp_head) tape.rp_head.push_back(LayerGradient::zeros_like(l));
  for (const auto& l : params.sp_head) tape.sp_head.push_back(LayerGradient::zeros_like(l));
  return tape;
}

namespace {

template <typename Layers>
Index count_layers(const Layers& layers) {
  Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename Layers>
void write_layers(const Layers& layers, Vector& flat, Index& offset) {
  for (const auto& l : layers) {
    flat.segment(offset, l.weights.size()) = l.weights.reshaped();
    offset += l.weights.size();
    flat.segment(offset, l.bias.size()) = l.bias;
    offset += l.bias.size();
  }
}

void read_layers(LayerStack& layers, const Vector& flat, Index& offset) {
  for (auto& l : layers) {
    l.weights.reshaped() = flat.segment(offset, l.weights.size());
    offset += l.weights.size();
    l.bias = flat.segment(offset, l.bias.size());
    offset += l.bias.size();
  }
}

double squared_weights(const LayerStack& layers) {
  double total = 0.0;
  for (const auto& l : layers) total += l.weights.squaredNorm();
  return total;
}

void check_heads(const NetworkParams& params) {
  if (params.rp_head.size() != params.sp_head.size()) {
    throw ShapeError("RP and SP heads have different depths");
  }
  for (std::size_t l = 0; l < params.rp_head.size(); ++l) {
    const auto& wr = params.rp_head[l].weights;
    const auto& ws = params.sp_head[l].weights;
    if (ws.cols() != wr.cols() || ws.rows() < wr.rows()) {
      throw ShapeError("SP head layer " + std::to_string(l) +
                           " cannot be aligned with the RP head layer",
                       static_cast<long>(l));
    }
  }
}

// Difference matrices between aligned SP and RP head weights.
std::vector<Matrix> similarity_differences(const NetworkParams& params,
                                           std::span<const Index> excluded_inputs) {
  check_heads(params);
  std::vector<Matrix> diffs;
  diffs.reserve(params.rp_head.size());
  for (std::size_t l = 0; l < params.rp_head.size(); ++l) {
    const auto& wr = params.rp_head[l].weights;
    Matrix diff = params.sp_head[l].weights.topRows(wr.rows()) - wr;
    if (l == 0 && params.shared.empty()) {
      for (Index c : excluded_inputs) {
        if (c < 0 || c >= diff.cols()) throw ShapeError("excluded input column out of range");
        diff.col(c).setZero();
      }
    }
    diffs.push_back(std::move(diff));
  }
  return diffs;
}

// Per-column risk contribution; gradient w.r.t. the scaled logits is written
// into `logit_grad` (already divided by `denominator` and multiplied by `weight`).
double risk_and_logit_grad(const Matrix& probs, std::span<const Index> labels,
                           double weight, double denominator, Matrix* logit_grad) {
  double sum = 0.0;
  if (logit_grad) *logit_grad = probs * (weight / denominator);
  for (Index i = 0; i < probs.cols(); ++i) {
    const Index y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= probs.rows()) throw InputError("label index out of range");
    const double p = probs(y, i);
    if (p < kProbabilityFloor) {
      sum -= std::log(kProbabilityFloor);
      if (logit_grad) logit_grad->col(i).setZero();  // clamped: flat in the logits
    } else {
      sum -= std::log(p);
      if (logit_grad) (*logit_grad)(y, i) -= weight / denominator;
    }
  }
  return sum;
}

void check_batch(const Batch& batch) {
  if (static_cast<std::size_t>(batch.rp_inputs.cols()) != batch.rp_labels.size() ||
      static_cast<std::size_t>(batch.sp_inputs.cols()) != batch.sp_labels.size()) {
    throw ShapeError("batch inputs and labels have different lengths");
  }
}

LossAndGradient compute(const NetworkParams& params, const Batch& batch,
                        const LossSpec& spec, bool want_gradient) {
  check_batch(batch);
  LossAndGradient out;
  LossBreakdown& loss = out.loss;
  GradientTape* tape = nullptr;
  if (want_gradient) {
    out.gradient = GradientTape::zeros_like(params);
    tape = &out.gradient;
  }

  if (params.is_joint()) {
    const Index n_rp = batch.rp_inputs.cols();
    const Index n_sp = batch.sp_inputs.cols();
    const double denominator = static_cast<double>(n_rp) + spec.lambda0 * n_sp;
    auto run = [&](const Matrix& inputs, std::span<const Index> labels, double weight,
                   double& risk) {
      if (inputs.cols() == 0) return;
      StackCache cache;
      Matrix utilities = forward_cached(inputs, params.shared, cache);
      Matrix probs = softmax_columns(utilities);
      Matrix grad;
      risk = weight * risk_and_logit_grad(probs, labels, weight, denominator,
                                          tape ? &grad : nullptr) /
             denominator;
      if (tape) backward_cached(params.shared, cache, grad, tape->shared);
    };
    run(batch.rp_inputs, batch.rp_labels, 1.0, loss.rp_risk);
    run(batch.sp_inputs, batch.sp_labels, spec.lambda0, loss.sp_risk);
  } else {
    check_heads(params);
    const double temperature = params.temperature();
    if (batch.rp_inputs.cols() > 0) {
      const double n = static_cast<double>(batch.rp_inputs.cols());
      StackCache shared_cache, head_cache;
      Matrix hidden = forward_cached(batch.rp_inputs, params.shared, shared_cache);
      Matrix utilities = forward_cached(hidden, params.rp_head, head_cache);
      Matrix probs = softmax_columns(utilities);
      Matrix grad;
      loss.rp_risk = risk_and_logit_grad(probs, batch.rp_labels, 1.0, n,
                                         tape ? &grad : nullptr) / n;
      if (tape) {
        Matrix hidden_grad = backward_cached(params.rp_head, head_cache, grad, tape->rp_head);
        backward_cached(params.shared, shared_cache, hidden_grad, tape->shared);
      }
    }
    if (batch.sp_inputs.cols() > 0) {
      const double n = static_cast<double>(batch.sp_inputs.cols());
      StackCache shared_cache, head_cache;
      Matrix hidden = forward_cached(batch.sp_inputs, params.shared, shared_cache);
      Matrix utilities = forward_cached(hidden, params.sp_head, head_cache);
      Matrix scaled = utilities / temperature;
      Matrix probs = softmax_columns(scaled);
      Matrix scaled_grad;
      loss.sp_risk = spec.lambda0 *
                     risk_and_logit_grad(probs, batch.sp_labels, spec.lambda0, n,
                                         tape ? &scaled_grad : nullptr) / n;
      if (tape) {
        if (spec.learn_temperature) {
          // z = V exp(-tau)  =>  dz/dtau = -z
          tape->log_temperature -= scaled_grad.cwiseProduct(scaled).sum();
        }
        Matrix grad = scaled_grad / temperature;
        Matrix hidden_grad = backward_cached(params.sp_head, head_cache, grad, tape->sp_head);
        backward_cached(params.shared, shared_cache, hidden_grad, tape->shared);
      }
    }
  }

  loss.shared_penalty = spec.lambda1 * squared_weights(params.shared);
  if (tape && spec.lambda1 != 0.0) {
    for (std::size_t l = 0; l < params.shared.size(); ++l) {
      tape->shared[l].weights += 2.0 * spec.lambda1 * params.shared[l].weights;
    }
  }
  if (!params.is_joint()) {
    loss.sp_penalty = spec.lambda2 * squared_weights(params.sp_head);
    if (tape && spec.lambda2 != 0.0) {
      for (std::size_t l = 0; l < params.sp_head.size(); ++l) {
        tape->sp_head[l].weights += 2.0 * spec.lambda2 * params.sp_head[l].weights;
      }
    }
    const auto diffs = similarity_differences(params, spec.similarity_excluded_inputs);
    double distance = 0.0;
    for (const auto& d : diffs) distance += d.squaredNorm();
    loss.similarity_penalty = spec.lambda3 * distance;
    if (tape && spec.lambda3 != 0.0) {
      for (std::size_t l = 0; l < diffs.size(); ++l) {
        const Matrix g = 2.0 * spec.lambda3 * diffs[l];
        tape->sp_head[l].weights.topRows(g.rows()) += g;
        tape->rp_head[l].weights -= g;
      }
    }
  }

  loss.total = loss.rp_risk + loss.sp_risk + loss.shared_penalty + loss.sp_penalty +
               loss.similarity_penalty;
  return out;
}

}  // namespace

Index parameter_count(const NetworkParams& params) {
  return count_layers(params.shared) + count_layers(params.rp_head) +
         count_layers(params.sp_head) + 1;
}

Vector flatten(const NetworkParams& params) {
  Vector flat(parameter_count(params));
  Index offset = 0;
  write_layers(params.shared, flat, offset);
  write_layers(params.rp_head, flat, offset);
  write_layers(params.sp_head, flat, offset);
  flat[offset] = params.log_temperature;
  return flat;
}

Vector flatten(const GradientTape& tape) {
  Vector flat(count_layers(tape.shared) + count_layers(tape.rp_head) +
              count_layers(tape.sp_head) + 1);
  Index offset = 0;
  write_layers(tape.shared, flat, offset);
  write_layers(tape.rp_head, flat, offset);
  write_layers(tape.sp_head, flat, offset);
  flat[offset] = tape.log_temperature;
  return flat;
}

void assign_flat(NetworkParams& params, const Vector& flat) {
  if (flat.size() != parameter_count(params)) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, network has " + std::to_string(parameter_count(params)));
  }
  Index offset = 0;
  read_layers(params.shared, flat, offset);
  read_layers(params.rp_head, flat, offset);
  read_layers(params.sp_head, flat, offset);
  params.log_temperature = flat[offset];
}

double similarity_distance_squared(const NetworkParams& params,
                                   std::span<const Index> excluded_inputs) {
  if (params.is_joint()) return 0.0;
  double total = 0.0;
  for (const auto& d : similarity_differences(params, excluded_inputs)) total += d.squaredNorm();
  return total;
}

LossBreakdown evaluate_loss(const NetworkParams& params, const Batch& batch,
                            const LossSpec& spec) {
  return compute(params, batch, spec, false).loss;
}

LossAndGradient backward(const NetworkParams& params, const Batch& batch,
                         const LossSpec& spec) {
  return compute(params, batch, spec, true);
}

}  // namespace mtlchoice

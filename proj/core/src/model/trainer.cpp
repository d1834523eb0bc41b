// SPDX-License-Identifier: Apache-2.0
#include "msnf/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <string>

#include "msnf/engine/optim.hpp"
#include "msnf/error.hpp"
#include "msnf/fairness/fairness.hpp"

namespace msnf {

std::vector<std::size_t> Schedule::phase_steps() const {
  std::vector<std::size_t> steps;
  for (std::size_t it : iterations) {
    steps.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(it) / scale)));
  }
  return steps;
}

std::size_t Schedule::total_iterations() const {
  const auto steps = phase_steps();
  return std::accumulate(steps.begin(), steps.end(), std::size_t{0});
}

double Schedule::learning_rate(std::size_t iteration) const {
  const auto steps = phase_steps();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (iteration < steps[i]) return learning_rates[i];
    iteration -= steps[i];
  }
  throw ContractError("iteration beyond the end of the schedule");
}

void Schedule::validate() const {
  if (learning_rates.size() != iterations.size() || learning_rates.empty()) {
    throw ParameterError("schedule needs one iteration count per learning rate");
  }
  for (double lr : learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("learning rates must be positive");
  }
  if (!(scale > 0.0)) throw ParameterError("schedule scale must be positive");
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must be in [0, 1)");
}

double initialize_duration_head(MsnfModel& model, std::span<const EncodedStudent> data, const MaskOptions& mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : data) {
    if (derive_mask(s.labels, mask)[kDD]) {
      sum += *s.labels.duration;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  model.params().at(model.heads().output_layer(kDD).bias).value.values()[0] = mean;
  return mean;
}

TrainResult train(MsnfModel& model, std::span<const EncodedStudent> data, const TrainOptions& options,
                  const TrainProgress& progress) {
  const Schedule& sched = options.schedule;
  sched.validate();
  if (data.empty()) throw EmptyBatchError("training set is empty");
  if (!options.sample_weights.empty() && options.sample_weights.size() != data.size()) {
    throw DimensionError("got " + std::to_string(options.sample_weights.size()) + " sample weights for " +
                         std::to_string(data.size()) + " students");
  }
  for (const auto& s : data) s.labels.validate();

  Rng order_rng(derive_seed(options.seed, 2));
  Rng dropout_rng(derive_seed(options.seed, 3));
  Sgd sgd(sched.momentum);

  const std::size_t batch = std::min(sched.batch_size, data.size());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  TrainResult result;
  const std::size_t total = sched.total_iterations();
  result.loss_trace.reserve(total);
  model.params().zero_grad();

  std::vector<const EncodedStudent*> members(batch);
  std::vector<const TaskLabels*> labels(batch);
  std::vector<double> weights(batch);
  std::unique_ptr<bool[]> groups(new bool[batch]);  // vector<bool> has no span view
  for (std::size_t it = 0; it < total; ++it) {
    if (cursor + batch > order.size()) {
      // Fisher-Yates with the portable index helper.
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(order_rng, i)]);
      cursor = 0;
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t idx = order[cursor + b];
      members[b] = &data[idx];
      labels[b] = &data[idx].labels;
      weights[b] = options.sample_weights.empty() ? 1.0 : options.sample_weights[idx];
      groups[b] = data[idx].privileged;
    }
    cursor += batch;

    EncoderBatch inputs = model.make_batch(members);
    Tape tape;
    auto graph = model.forward(tape, inputs, ops::Mode::train, dropout_rng);
    BatchTargets targets = BatchTargets::build(labels, weights, options.mask);
    CascadeLoss cl = cascade_loss(tape, graph.heads, targets);
    Var loss = ops::scale(tape, cl.total, 1.0 / static_cast<double>(batch));
    if (options.regularizer_eta != 0.0) {
      Var reg = fairness::prejudice_regularizer(tape, graph.heads.out[kFD],
                                                std::span<const bool>(groups.get(), batch), options.regularizer_eta);
      loss = ops::add(tape, loss, reg);
    }
    const double value = tape.value(loss).values()[0];
    if (!std::isfinite(value)) {
      char msg[128];
      std::snprintf(msg, sizeof(msg), "loss became %g at iteration %zu (learning rate %g)", value, it,
                    sched.learning_rate(it));
      throw DivergenceError(msg);
    }
    tape.backward(loss);
    sgd.step(model.params(), sched.learning_rate(it));
    result.loss_trace.push_back(value);
    if (progress) progress(it, value);
  }
  return result;
}

}  // namespace msnf

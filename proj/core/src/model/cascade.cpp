// SPDX-License-Identifier: Apache-2.0
#include "msnf/model/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msnf/error.hpp"

namespace msnf {

const char* task_name(std::size_t task) {
  static constexpr const char* names[kTaskCount] = {"FD", "TD", "ND", "DD", "CD"};
  if (task >= kTaskCount) throw ContractError("task index out of range");
  return names[task];
}

void TaskLabels::validate() const {
  if (!dropout) {
    if (temporary || next_semester || duration || cause) {
      throw ContractError("labels of a non-dropout student must leave y2..y5 undefined");
    }
    return;
  }
  if (!temporary) throw ContractError("dropout label set but dropout type undefined");
  if (!cause) throw ContractError("dropout label set but cause undefined");
  if (*cause >= kCauseCount) {
    throw ContractError("cause index " + std::to_string(*cause) + " outside 0.." + std::to_string(kCauseCount - 1));
  }
  if (duration && !(std::isfinite(*duration) && *duration >= 0.0)) {
    throw ContractError("duration must be finite and nonnegative");
  }
}

TaskMask derive_mask(const TaskLabels& labels, const MaskOptions& options) {
  TaskMask m{true, false, false, false, false};
  if (labels.dropout) {
    if (!labels.temporary) throw ContractError("TD is unmasked but y2 is undefined");
    if (!*labels.temporary) {
      m = {true, true, false, false, false};
    } else {
      if (!labels.next_semester) throw ContractError("ND is unmasked but y3 is undefined");
      if (options.rule3 && *labels.next_semester) {
        m = {true, true, true, false, false};
      } else {
        m = {true, true, true, true, true};
      }
    }
  }
  if (m[kDD] && !labels.duration) throw ContractError("DD is unmasked but y4 is undefined");
  if (m[kCD] && !labels.cause) throw ContractError("CD is unmasked but y5 is undefined");
  return m;
}

double cross_entropy(std::span<const double> p, std::size_t y) {
  if (y >= p.size()) throw ContractError("class index " + std::to_string(y) + " outside probability vector");
  return -std::log(std::max(p[y], ops::kProbabilityFloor));
}

double euclidean_loss(double y_hat, double y) {
  const double d = y_hat - y;
  return d * d;
}

LossTerms loss_terms(const TaskOutputs& out, const TaskLabels& labels, const MaskOptions& options) {
  LossTerms r;
  r.mask = derive_mask(labels, options);
  r.terms[kFD] = cross_entropy(out.p1, labels.dropout ? 1 : 0);
  if (r.mask[kTD]) r.terms[kTD] = cross_entropy(out.p2, *labels.temporary ? 1 : 0);
  if (r.mask[kND]) r.terms[kND] = cross_entropy(out.p3, *labels.next_semester ? 1 : 0);
  if (r.mask[kDD]) r.terms[kDD] = euclidean_loss(out.y4_hat, *labels.duration);
  if (r.mask[kCD]) r.terms[kCD] = cross_entropy(out.p5, *labels.cause);
  for (std::size_t k = 0; k < kTaskCount; ++k) {
    if (r.mask[k]) r.total += r.terms[k];
  }
  return r;
}

double total_loss(const TaskOutputs& outputs, const TaskLabels& labels, const MaskOptions& options) {
  return loss_terms(outputs, labels, options).total;
}

CascadeHeads CascadeHeads::create(ParameterStore& store, std::size_t z_width, const ModelConfig& config,
                                  Rng& rng) {
  static constexpr std::size_t out_units[kTaskCount] = {2, 2, 2, 1, kCauseCount};
  CascadeHeads h;
  h.z_width_ = z_width;
  h.activation_ = config.activation;
  for (std::size_t k = 0; k < kTaskCount; ++k) {
    const std::string prefix = "head" + std::to_string(k + 1);
    const std::size_t in = z_width + (k == 0 ? 0 : config.head_width);
    h.hidden_[k] = DenseLayer::create(store, prefix + ".hidden", in, config.head_width, rng);
    h.out_[k] = DenseLayer::create(store, prefix + ".out", config.head_width, out_units[k], rng);
  }
  return h;
}

CascadeHeads::Vars CascadeHeads::forward(Tape& tape, ParameterStore& store, Var z) const {
  const Tensor& zv = tape.value(z);
  if (zv.dim(zv.rank() - 1) != z_width_) {
    throw DimensionError("cascade input has width " + std::to_string(zv.dim(zv.rank() - 1)) + ", heads expect " +
                         std::to_string(z_width_));
  }
  Vars v;
  for (std::size_t k = 0; k < kTaskCount; ++k) {
    Var in = z;
    if (k > 0) {
      const Var parts[2] = {z, v.hidden[k - 1]};
      in = ops::concat_columns(tape, parts);
    }
    v.hidden[k] = hidden_[k].forward(tape, store, in, activation_);
    Var logits = out_[k].forward(tape, store, v.hidden[k], ops::Activation::identity);
    v.out[k] = k == kDD ? logits : ops::softmax_rows(tape, logits);
  }
  return v;
}

BatchTargets BatchTargets::build(std::span<const TaskLabels* const> labels, std::span<const double> sample_weights,
                                 const MaskOptions& options) {
  const std::size_t n = labels.size();
  if (!sample_weights.empty() && sample_weights.size() != n) {
    throw DimensionError("got " + std::to_string(sample_weights.size()) + " sample weights for " +
                         std::to_string(n) + " rows");
  }
  BatchTargets t;
  t.fd.assign(n, 0);
  t.td.assign(n, 0);
  t.nd.assign(n, 0);
  t.cd.assign(n, 0);
  t.dd.assign(n, 0.0);
  for (auto& w : t.weight) w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const TaskLabels& y = *labels[i];
    const TaskMask m = derive_mask(y, options);
    const double w = sample_weights.empty() ? 1.0 : sample_weights[i];
    t.fd[i] = y.dropout ? 1 : 0;
    if (m[kTD]) t.td[i] = *y.temporary ? 1 : 0;
    if (m[kND]) t.nd[i] = *y.next_semester ? 1 : 0;
    if (m[kDD]) t.dd[i] = *y.duration;
    if (m[kCD]) t.cd[i] = *y.cause;
    for (std::size_t k = 0; k < kTaskCount; ++k) t.weight[k][i] = m[k] ? w : 0.0;
  }
  return t;
}

CascadeLoss cascade_loss(Tape& tape, const CascadeHeads::Vars& heads, const BatchTargets& t) {
  CascadeLoss l;
  l.terms[kFD] = ops::weighted_cross_entropy(tape, heads.out[kFD], t.fd, t.weight[kFD]);
  l.terms[kTD] = ops::weighted_cross_entropy(tape, heads.out[kTD], t.td, t.weight[kTD]);
  l.terms[kND] = ops::weighted_cross_entropy(tape, heads.out[kND], t.nd, t.weight[kND]);
  l.terms[kDD] = ops::weighted_squared_error(tape, heads.out[kDD], t.dd, t.weight[kDD]);
  l.terms[kCD] = ops::weighted_cross_entropy(tape, heads.out[kCD], t.cd, t.weight[kCD]);
  Var total = l.terms[0];
  for (std::size_t k = 1; k < kTaskCount; ++k) total = ops::add(tape, total, l.terms[k]);
  l.total = total;
  return l;
}

}  // namespace msnf

// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/tape.hpp"

#include <utility>

#include "msnf/error.hpp"

namespace msnf {

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = tracking_;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.external = &p.value;
  if (tracking_ && p.trainable) {
    if (!p.value.has_grad()) throw ContractError("parameter '" + p.name + "' has no gradient slot");
    n.external_grad = &p.value;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward backward) {
  Node n;
  n.owned = std::move(value);
  if (tracking_) {
    for (Var p : parents) {
      if (nodes_.at(p.id).requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.external ? *n.external : n.owned;
}

std::span<double> Tape::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.external_grad) return n.external_grad->grad();
  if (n.grad.empty()) n.grad.assign(value(v).size(), 0.0);
  return n.grad;
}

std::span<const double> Tape::grad_or_empty(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.external_grad) return std::as_const(*n.external_grad).grad();
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!tracking_) throw ContractError("backward on a tape without tracking");
  if (value(loss).size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + shape_string(value(loss).shape()));
  }
  if (!requires_grad(loss)) return;
  grad(loss)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this);
  }
}

}  // namespace msnf

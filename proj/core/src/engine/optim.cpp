// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/optim.hpp"

#include "msnf/error.hpp"

namespace msnf {

void Sgd::step(ParameterStore& store, double learning_rate) {
  auto& entries = store.entries();
  for (const auto& p : entries) {
    if (p.trainable && !p.value.has_grad()) {
      throw ContractError("sgd: parameter '" + p.name + "' has no gradient");
    }
  }
  if (momentum_ != 0.0 && velocity_.size() != entries.size()) {
    velocity_.assign(entries.size(), {});
    for (std::size_t i = 0; i < entries.size(); ++i) velocity_[i].assign(entries[i].value.size(), 0.0);
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& p = entries[i];
    if (!p.trainable) continue;
    auto w = p.value.values();
    auto g = p.value.grad();
    if (momentum_ == 0.0) {
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= learning_rate * g[j];
    } else {
      auto& v = velocity_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        v[j] = momentum_ * v[j] + g[j];
        w[j] -= learning_rate * v[j];
      }
    }
    p.value.zero_grad();
  }
}

void sgd_step(ParameterStore& store, double learning_rate) { Sgd().step(store, learning_rate); }

}  // namespace msnf

// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/parameters.hpp"

#include <cmath>

#include "msnf/error.hpp"

namespace msnf {

ParamRef ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  if (trainable) value.enable_grad();
  const std::size_t idx = entries_.size();
  index_.emplace(name, idx);
  entries_.push_back(Parameter{std::move(name), std::move(value), trainable});
  return ParamRef{idx};
}

Parameter& ParameterStore::at(std::string_view name) { return entries_.at(find(name).index); }

const Parameter& ParameterStore::at(std::string_view name) const {
  return entries_.at(find(name).index);
}

bool ParameterStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

ParamRef ParameterStore::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return ParamRef{it->second};
}

std::size_t ParameterStore::trainable_scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : entries_) p.value.zero_grad();
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = uniform(rng, -limit, limit);
}

}  // namespace msnf

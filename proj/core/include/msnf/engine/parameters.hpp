// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "msnf/engine/rng.hpp"
#include "msnf/engine/tensor.hpp"

namespace msnf {

/// A named tensor owned by a ParameterStore. Trainable entries carry a
/// gradient slot; buffers (running statistics, feature scalers) do not.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
};

/// Index handle into a ParameterStore; stays valid when the store is copied.
struct ParamRef {
  std::size_t index = static_cast<std::size_t>(-1);
};

class ParameterStore {
 public:
  ParamRef add(std::string name, Tensor value, bool trainable = true);

  Parameter& at(ParamRef ref) { return entries_.at(ref.index); }
  const Parameter& at(ParamRef ref) const { return entries_.at(ref.index); }
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  ParamRef find(std::string_view name) const;

  std::vector<Parameter>& entries() { return entries_; }
  const std::vector<Parameter>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t trainable_scalar_count() const;

  void zero_grad();

 private:
  std::vector<Parameter> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace msnf

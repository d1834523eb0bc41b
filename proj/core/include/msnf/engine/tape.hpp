// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "msnf/engine/parameters.hpp"
#include "msnf/engine/tensor.hpp"

namespace msnf {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Records a forward pass as a linear trace and replays it in reverse.
///
/// Parameter nodes alias the ParameterStore entry, so backward() accumulates
/// straight into the parameter's gradient slot. A tape with tracking disabled
/// keeps values only and never stores backward closures.
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  explicit Tape(bool tracking = true) : tracking_(tracking) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool tracking() const { return tracking_; }

  Var constant(Tensor value);
  /// Constant that still receives a gradient (finite-difference checks on inputs).
  Var leaf(Tensor value);
  Var parameter(Parameter& p);
  Var parameter(ParameterStore& store, ParamRef ref) { return parameter(store.at(ref)); }

  /// Appends an op result. `backward` runs only if some parent needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(Tensor value, std::span<const Var> parents, Backward backward);

  /// Stays valid for the tape's lifetime.
  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient buffer of `v`, allocated on first use.
  std::span<double> grad(Var v);
  std::span<const double> grad_or_empty(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<double> grad;
    Tensor* external_grad = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  bool tracking_;
  std::deque<Node> nodes_;  // deque: value() references survive later records
};

}  // namespace msnf

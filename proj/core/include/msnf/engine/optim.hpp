// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "msnf/engine/parameters.hpp"

namespace msnf {

/// Plain SGD with optional heavy-ball momentum:
///   v <- momentum * v + grad;  p <- p - lr * v
/// Gradients are zeroed after every step.
class Sgd {
 public:
  explicit Sgd(double momentum = 0.0) : momentum_(momentum) {}

  void step(ParameterStore& store, double learning_rate);
  double momentum() const { return momentum_; }

 private:
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

/// One momentum-free update over every trainable parameter, then zero grads.
void sgd_step(ParameterStore& store, double learning_rate);

}  // namespace msnf

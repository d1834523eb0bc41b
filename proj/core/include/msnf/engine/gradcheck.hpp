// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "msnf/engine/parameters.hpp"
#include "msnf/engine/tape.hpp"

namespace msnf {

struct GradCheckOptions {
  double step = 1e-4;
  /// Denominator floor of the relative error, so exact zeros compare cleanly.
  double floor = 1e-6;
  /// Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t max_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "<tensor>[<index>] analytic=... numeric=..."
  std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

/// Compares backward() gradients of every trainable entry in `store` against
/// central differences of the scalar returned by `build`. `build` must rebuild
/// the whole forward pass on the tape it is given and be deterministic.
GradCheckResult check_gradients(ParameterStore& store, const std::function<Var(Tape&)>& build,
                                const GradCheckOptions& options = {});

}  // namespace msnf

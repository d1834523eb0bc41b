// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "msnf/engine/rng.hpp"

namespace msnf {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(ParameterStore& store, const std::function<Var(Tape&)>& build,
                                const GradCheckOptions& options) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(build(tape));
  }
  auto evaluate = [&]() {
    Tape tape(false);
    return tape.value(build(tape))[0];
  };

  Rng rng(options.seed);
  GradCheckResult result;
  for (auto& p : store.entries()) {
    if (!p.trainable) continue;
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_per_tensor && idx.size() > options.max_per_tensor) {
      for (std::size_t i = 0; i < options.max_per_tensor; ++i) {
        std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
      }
      idx.resize(options.max_per_tensor);
    }
    for (std::size_t i : idx) {
      const double analytic = p.value.grad()[i];
      const double saved = p.value[i];
      p.value[i] = saved + options.step;
      const double up = evaluate();
      p.value[i] = saved - options.step;
      const double down = evaluate();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic, numeric, options.floor);
      ++result.checked;
      if (err > result.max_relative_error || result.worst.empty()) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        std::ostringstream os;
        os << p.name << '[' << i << "] analytic=" << analytic << " numeric=" << numeric;
        result.worst = os.str();
      }
    }
  }
  store.zero_grad();
  return result;
}

}  // namespace msnf

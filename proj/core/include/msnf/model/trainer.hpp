// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "msnf/model/msnf_model.hpp"

namespace msnf {

/// Piecewise-constant learning rate. Phase i runs round(iterations[i] / scale)
/// steps at learning_rates[i].
struct Schedule {
  std::vector<double> learning_rates{1e-3, 1e-4};
  std::vector<std::size_t> iterations{16000, 5000};
  double scale = 50.0;
  std::size_t batch_size = 32;
  double momentum = 0.0;

  std::vector<std::size_t> phase_steps() const;
  std::size_t total_iterations() const;
  double learning_rate(std::size_t iteration) const;
  void validate() const;
};

struct TrainOptions {
  Schedule schedule;
  std::uint64_t seed = 0;
  MaskOptions mask;
  /// Prejudice regularizer strength on the FD head; 0 disables it.
  double regularizer_eta = 0.0;
  /// Per-student loss multipliers (reweighing); empty means all ones.
  std::vector<double> sample_weights;
};

struct TrainResult {
  std::vector<double> loss_trace;  // one entry per iteration
};

/// Sets the DD output bias to the mean duration over rows whose mask enables
/// DD, so the regression head starts at the predict-the-mean baseline.
/// Returns that mean (0 and no change when no row qualifies).
double initialize_duration_head(MsnfModel& model, std::span<const EncodedStudent> data, const MaskOptions& mask = {});

using TrainProgress = std::function<void(std::size_t iteration, double loss)>;

/// Mini-batch SGD on the masked cascade loss averaged over the batch.
/// Batches are drawn from a per-epoch shuffle; a short tail starts the next
/// epoch instead. Throws DivergenceError when the loss stops being finite.
/// The feature scaler is left alone; fit it before training.
TrainResult train(MsnfModel& model, std::span<const EncodedStudent> data, const TrainOptions& options,
                  const TrainProgress& progress = {});

}  // namespace msnf

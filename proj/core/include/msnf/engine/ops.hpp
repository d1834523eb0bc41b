// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "msnf/engine/rng.hpp"
#include "msnf/engine/tape.hpp"

// Differentiable ops. Each records its forward value on the tape together with
// a hand-written backward closure. Sequence ops work on "packed" tensors: the
// rows of all sequences in a batch stacked as [total_steps, features], with
// `offsets` (size batch + 1) marking where each sequence starts.

namespace msnf::ops {

enum class Activation { identity, relu, tanh, sigmoid };
enum class Padding { same, valid };
enum class Mode { train, infer };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

Var activate(Tape& tape, Var x, Activation act);

/// act(x W^T + b). x is [n, in] or [in]; W is [out, in]; b is [out].
Var dense(Tape& tape, Var x, Var weight, Var bias, Activation act);

/// Cross-correlation. x is [len, ch_in] or [batch, len, ch_in]; W is
/// [filters, ch_in, width]; b is [filters].
Var conv1d(Tape& tape, Var x, Var weight, Var bias, Padding padding);

/// Max over windows along the length axis of [len, ch] or [batch, len, ch].
Var maxpool1d(Tape& tape, Var x, std::size_t window, std::size_t stride);

/// Normalizes the last axis over all leading rows. Train mode uses batch
/// statistics and folds them into the running buffers with
/// running = momentum * running + (1 - momentum) * batch.
Var batchnorm(Tape& tape, Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
              Mode mode, double epsilon, double momentum);

/// Inverted dropout; identity in infer mode or when rate == 0.
Var dropout(Tape& tape, Var x, double rate, Mode mode, Rng& rng);

/// LSTM over packed sequences with zero initial state. W is [4, hidden, in + hidden]
/// holding the input, forget, candidate and output gate blocks; b is [4, hidden].
/// Returns every hidden state, packed like the input.
Var lstm(Tape& tape, Var x, std::span<const std::size_t> offsets, Var weight, Var bias);

/// Reverses the rows of each packed sequence in place of time.
Var reverse_sequences(Tape& tape, Var x, std::span<const std::size_t> offsets);

/// Last row of every packed sequence: [batch, features].
Var last_steps(Tape& tape, Var x, std::span<const std::size_t> offsets);

/// Element-wise max over the rows of each sequence. Sequences with no rows
/// take `fallback` ([features]) verbatim. `x` may be absent when every
/// sequence is empty.
Var segment_max(Tape& tape, const Var* x, std::span<const std::size_t> offsets, Var fallback);

/// Forward and reverse LSTMs, per-step concatenation to 2*hidden, then max over
/// time. Empty sequences produce `fallback`. `x` may be null when the whole
/// batch has no rows.
Var bilstm_maxpool(Tape& tape, const Var* x, std::span<const std::size_t> offsets, Var fwd_weight,
                   Var fwd_bias, Var bwd_weight, Var bwd_bias, Var fallback);

Var concat_columns(Tape& tape, std::span<const Var> parts);
Var reshape(Tape& tape, Var x, Shape shape);
Var softmax_rows(Tape& tape, Var x);

Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
Var sum(Tape& tape, Var x);
Var mul(Tape& tape, Var a, Var b);

inline constexpr double kProbabilityFloor = 1e-12;

/// sum_n w_n * -log(max(p[n, y_n], 1e-12)). Rows with w_n == 0 are skipped.
Var weighted_cross_entropy(Tape& tape, Var probs, std::span<const std::size_t> targets,
                           std::span<const double> weights);

/// sum_n w_n * (pred[n] - y_n)^2 for pred [n, 1] or [n]. Rows with w_n == 0 are skipped.
Var weighted_squared_error(Tape& tape, Var pred, std::span<const double> targets,
                           std::span<const double> weights);

}  // namespace msnf::ops

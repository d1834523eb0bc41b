// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "msnf/engine/ops.hpp"
#include "msnf/engine/parameters.hpp"

// Layers own nothing but handles into a ParameterStore, so a model copied
// together with its store stays consistent.

namespace msnf {

enum class LayerKind { conv1d, dense, lstm, bilstm, batchnorm };

struct Conv1dLayer {
  ParamRef weight;  // [filters, in_channels, width]
  ParamRef bias;    // [filters]
  std::size_t filters = 0, in_channels = 0, width = 0;

  static Conv1dLayer create(ParameterStore& store, const std::string& prefix, std::size_t in_channels,
                            std::size_t filters, std::size_t width, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, Var x, ops::Padding padding) const;
};

struct DenseLayer {
  ParamRef weight;  // [units, in]
  ParamRef bias;    // [units]
  std::size_t in = 0, units = 0;

  static DenseLayer create(ParameterStore& store, const std::string& prefix, std::size_t in,
                           std::size_t units, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, Var x, ops::Activation act) const;
};

struct LstmLayer {
  ParamRef weight;  // [4, hidden, in + hidden], gate blocks i, f, g, o
  ParamRef bias;    // [4, hidden]
  std::size_t in = 0, hidden = 0;

  static LstmLayer create(ParameterStore& store, const std::string& prefix, std::size_t in,
                          std::size_t hidden, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, Var x, std::span<const std::size_t> offsets) const;
};

struct BiLstmMaxPoolLayer {
  LstmLayer forward_dir;
  LstmLayer backward_dir;
  ParamRef fallback;  // [2 * hidden], emitted for empty sequences

  static BiLstmMaxPoolLayer create(ParameterStore& store, const std::string& prefix, std::size_t in,
                                   std::size_t hidden, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, const Var* x, std::span<const std::size_t> offsets) const;
};

struct BatchNormLayer {
  ParamRef gamma, beta;                  // trainable, [channels]
  ParamRef running_mean, running_var;    // buffers, [channels]
  std::size_t channels = 0;
  double epsilon = 1e-5;
  double momentum = 0.9;

  static BatchNormLayer create(ParameterStore& store, const std::string& prefix, std::size_t channels,
                               double epsilon = 1e-5, double momentum = 0.9);
  Var forward(Tape& tape, ParameterStore& store, Var x, ops::Mode mode) const;
};

}  // namespace msnf

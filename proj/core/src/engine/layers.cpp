// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/layers.hpp"

namespace msnf {

Conv1dLayer Conv1dLayer::create(ParameterStore& store, const std::string& prefix, std::size_t in_channels,
                                std::size_t filters, std::size_t width, Rng& rng) {
  Tensor w({filters, in_channels, width});
  glorot_uniform(w, in_channels * width, filters * width, rng);
  Conv1dLayer l;
  l.weight = store.add(prefix + ".weight", std::move(w));
  l.bias = store.add(prefix + ".bias", Tensor({filters}));
  l.filters = filters;
  l.in_channels = in_channels;
  l.width = width;
  return l;
}

Var Conv1dLayer::forward(Tape& tape, ParameterStore& store, Var x, ops::Padding padding) const {
  return ops::conv1d(tape, x, tape.parameter(store, weight), tape.parameter(store, bias), padding);
}

DenseLayer DenseLayer::create(ParameterStore& store, const std::string& prefix, std::size_t in,
                              std::size_t units, Rng& rng) {
  Tensor w({units, in});
  glorot_uniform(w, in, units, rng);
  DenseLayer l;
  l.weight = store.add(prefix + ".weight", std::move(w));
  l.bias = store.add(prefix + ".bias", Tensor({units}));
  l.in = in;
  l.units = units;
  return l;
}

Var DenseLayer::forward(Tape& tape, ParameterStore& store, Var x, ops::Activation act) const {
  return ops::dense(tape, x, tape.parameter(store, weight), tape.parameter(store, bias), act);
}

LstmLayer LstmLayer::create(ParameterStore& store, const std::string& prefix, std::size_t in,
                            std::size_t hidden, Rng& rng) {
  Tensor w({4, hidden, in + hidden});
  glorot_uniform(w, in + hidden, hidden, rng);
  Tensor b({4, hidden});
  for (std::size_t j = 0; j < hidden; ++j) b.at(1, j) = 1.0;  // forget gate
  LstmLayer l;
  l.weight = store.add(prefix + ".weight", std::move(w));
  l.bias = store.add(prefix + ".bias", std::move(b));
  l.in = in;
  l.hidden = hidden;
  return l;
}

Var LstmLayer::forward(Tape& tape, ParameterStore& store, Var x, std::span<const std::size_t> offsets) const {
  return ops::lstm(tape, x, offsets, tape.parameter(store, weight), tape.parameter(store, bias));
}

BiLstmMaxPoolLayer BiLstmMaxPoolLayer::create(ParameterStore& store, const std::string& prefix, std::size_t in,
                                              std::size_t hidden, Rng& rng) {
  BiLstmMaxPoolLayer l;
  l.forward_dir = LstmLayer::create(store, prefix + ".forward", in, hidden, rng);
  l.backward_dir = LstmLayer::create(store, prefix + ".backward", in, hidden, rng);
  l.fallback = store.add(prefix + ".empty_default", Tensor({2 * hidden}));
  return l;
}

Var BiLstmMaxPoolLayer::forward(Tape& tape, ParameterStore& store, const Var* x,
                                std::span<const std::size_t> offsets) const {
  return ops::bilstm_maxpool(tape, x, offsets, tape.parameter(store, forward_dir.weight),
                             tape.parameter(store, forward_dir.bias), tape.parameter(store, backward_dir.weight),
                             tape.parameter(store, backward_dir.bias), tape.parameter(store, fallback));
}

BatchNormLayer BatchNormLayer::create(ParameterStore& store, const std::string& prefix, std::size_t channels,
                                      double epsilon, double momentum) {
  BatchNormLayer l;
  l.gamma = store.add(prefix + ".gamma", Tensor({channels}, 1.0));
  l.beta = store.add(prefix + ".beta", Tensor({channels}));
  l.running_mean = store.add(prefix + ".running_mean", Tensor({channels}), false);
  l.running_var = store.add(prefix + ".running_var", Tensor({channels}, 1.0), false);
  l.channels = channels;
  l.epsilon = epsilon;
  l.momentum = momentum;
  return l;
}

Var BatchNormLayer::forward(Tape& tape, ParameterStore& store, Var x, ops::Mode mode) const {
  return ops::batchnorm(tape, x, tape.parameter(store, gamma), tape.parameter(store, beta),
                        store.at(running_mean).value, store.at(running_var).value, mode, epsilon, momentum);
}

}  // namespace msnf

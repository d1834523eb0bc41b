// SPDX-License-Identifier: Apache-2.0
#include "msnf/model/encoders.hpp"

#include <string>

#include "msnf/error.hpp"

namespace msnf {

StaticEncoder StaticEncoder::create(ParameterStore& store, const ModelConfig& config, Rng& rng) {
  StaticEncoder e;
  e.dropout_ = config.dropout_rate;
  e.activation_ = config.activation;
  std::size_t channels = 1;
  for (std::size_t b = 0; b < kStaticConvBlocks.size(); ++b) {
    const std::string n = std::to_string(b + 1);
    const auto spec = kStaticConvBlocks[b];
    e.conv_[b] = Conv1dLayer::create(store, "static.conv" + n, channels, spec.filters, spec.width, rng);
    e.bn_[b] = BatchNormLayer::create(store, "static.bn" + n, spec.filters, config.bn_epsilon, config.bn_momentum);
    channels = spec.filters;
  }
  e.proj_ = DenseLayer::create(store, "static.dense", flattened_width(), kStaticOut, rng);
  return e;
}

Var StaticEncoder::forward(Tape& tape, ParameterStore& store, Var onehot, ops::Mode mode, Rng& rng) const {
  const Tensor& in = tape.value(onehot);
  if (in.rank() != 3 || in.dim(1) != kStaticWidth || in.dim(2) != 1) {
    throw DimensionError("static input " + shape_string(in.shape()) + " does not match [B x " +
                         std::to_string(kStaticWidth) + " x 1]");
  }
  const std::size_t batch = in.dim(0);
  Var x = onehot;
  for (std::size_t b = 0; b < conv_.size(); ++b) {
    x = ops::activate(tape, conv_[b].forward(tape, store, x, ops::Padding::same), activation_);
    x = bn_[b].forward(tape, store, x, mode);
    x = ops::maxpool1d(tape, x, kStaticPoolWindow, kStaticPoolStride);
    x = ops::dropout(tape, x, dropout_, mode, rng);
  }
  x = ops::reshape(tape, x, {batch, flattened_width()});
  return proj_.forward(tape, store, x, activation_);
}

TemporalEncoder TemporalEncoder::create(ParameterStore& store, const ModelConfig& config, Rng& rng) {
  TemporalEncoder e;
  e.dropout_ = config.dropout_rate;
  e.activation_ = config.activation;
  const double eps = config.bn_epsilon, mom = config.bn_momentum;
  e.lstm1_ = LstmLayer::create(store, "temporal.lstm1", kPerformanceWidth, kTemporalLstm1, rng);
  e.bn1_ = BatchNormLayer::create(store, "temporal.bn1", kTemporalLstm1, eps, mom);
  e.lstm2_ = LstmLayer::create(store, "temporal.lstm2", kTemporalLstm1, kTemporalLstm2, rng);
  e.bn2_ = BatchNormLayer::create(store, "temporal.bn2", kTemporalLstm2, eps, mom);
  e.dense1_ = DenseLayer::create(store, "temporal.dense1", kTemporalLstm2, kTemporalDense, rng);
  e.bn3_ = BatchNormLayer::create(store, "temporal.bn3", kTemporalDense, eps, mom);
  e.dense2_ = DenseLayer::create(store, "temporal.dense2", kTemporalDense, kTemporalOut, rng);
  return e;
}

Var TemporalEncoder::forward(Tape& tape, ParameterStore& store, Var packed, std::span<const std::size_t> offsets,
                             ops::Mode mode, Rng& rng) const {
  Var x = lstm1_.forward(tape, store, packed, offsets);
  x = ops::dropout(tape, x, dropout_, mode, rng);
  x = bn1_.forward(tape, store, x, mode);
  x = lstm2_.forward(tape, store, x, offsets);
  x = ops::last_steps(tape, x, offsets);
  x = ops::dropout(tape, x, dropout_, mode, rng);
  x = bn2_.forward(tape, store, x, mode);
  x = dense1_.forward(tape, store, x, activation_);
  x = ops::dropout(tape, x, dropout_, mode, rng);
  x = bn3_.forward(tape, store, x, mode);
  return dense2_.forward(tape, store, x, activation_);
}

NoteEncoder NoteEncoder::create(ParameterStore& store, const ModelConfig& config, Rng& rng) {
  NoteEncoder e;
  e.bilstm_ = BiLstmMaxPoolLayer::create(store, "notes.bilstm", config.note_dim, config.hidden_note, rng);
  return e;
}

Var NoteEncoder::forward(Tape& tape, ParameterStore& store, const Var* packed,
                         std::span<const std::size_t> offsets) const {
  return bilstm_.forward(tape, store, packed, offsets);
}

FusedRepresentation fuse(std::vector<double> z_t, std::vector<double> z_s, std::vector<double> z_n,
                         const ModelConfig& config) {
  auto check = [](const std::vector<double>& v, bool on, std::size_t width, const char* what) {
    const std::size_t expected = on ? width : 0;
    if (v.size() != expected) {
      throw DimensionError(std::string(what) + " has width " + std::to_string(v.size()) + ", expected " +
                           std::to_string(expected));
    }
  };
  check(z_t, config.modalities.temporal, kTemporalOut, "z_temporal");
  check(z_s, config.modalities.static_info, kStaticOut, "z_static");
  check(z_n, config.modalities.notes, config.note_width(), "z_note");
  FusedRepresentation f;
  f.z.reserve(z_t.size() + z_s.size() + z_n.size());
  f.z.insert(f.z.end(), z_t.begin(), z_t.end());
  f.z.insert(f.z.end(), z_s.begin(), z_s.end());
  f.z.insert(f.z.end(), z_n.begin(), z_n.end());
  f.z_temporal = std::move(z_t);
  f.z_static = std::move(z_s);
  f.z_note = std::move(z_n);
  return f;
}

}  // namespace msnf

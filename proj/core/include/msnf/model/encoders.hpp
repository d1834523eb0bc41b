// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "msnf/engine/layers.hpp"
#include "msnf/model/config.hpp"

namespace msnf {

/// One-hot demographics [B, 120, 1] -> [B, 50]. Three conv/bn/pool/dropout
/// blocks, flatten, dense.
class StaticEncoder {
 public:
  static StaticEncoder create(ParameterStore& store, const ModelConfig& config, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, Var onehot, ops::Mode mode, Rng& rng) const;

  static constexpr std::size_t flattened_width() {
    std::size_t len = kStaticWidth;
    for (std::size_t b = 0; b < kStaticConvBlocks.size(); ++b) len = (len - kStaticPoolWindow) / kStaticPoolStride + 1;
    return len * kStaticConvBlocks.back().filters;
  }

 private:
  std::array<Conv1dLayer, 3> conv_;
  std::array<BatchNormLayer, 3> bn_;
  DenseLayer proj_;
  double dropout_ = 0.0;
  ops::Activation activation_ = ops::Activation::relu;
};

/// Packed semesters [S, 20] -> [B, 40]. The dense stack reads the last LSTM(55) state.
class TemporalEncoder {
 public:
  static TemporalEncoder create(ParameterStore& store, const ModelConfig& config, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, Var packed, std::span<const std::size_t> offsets, ops::Mode mode,
              Rng& rng) const;

 private:
  LstmLayer lstm1_, lstm2_;
  BatchNormLayer bn1_, bn2_, bn3_;
  DenseLayer dense1_, dense2_;
  double dropout_ = 0.0;
  ops::Activation activation_ = ops::Activation::relu;
};

/// Packed note embeddings [M, dim] -> [B, 2 * hidden_note]; students with no
/// notes get the trainable `notes.bilstm.empty_default`.
class NoteEncoder {
 public:
  static NoteEncoder create(ParameterStore& store, const ModelConfig& config, Rng& rng);
  Var forward(Tape& tape, ParameterStore& store, const Var* packed, std::span<const std::size_t> offsets) const;

 private:
  BiLstmMaxPoolLayer bilstm_;
};

struct FusedRepresentation {
  std::vector<double> z_temporal, z_static, z_note, z;
};

/// z = [z_t, z_s, z_n]. Throws DimensionError if a part does not match `config`.
FusedRepresentation fuse(std::vector<double> z_t, std::vector<double> z_s, std::vector<double> z_n,
                         const ModelConfig& config);

}  // namespace msnf

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>

#include "msnf/engine/ops.hpp"

namespace msnf {

// Fixed encoder geometry.
inline constexpr std::size_t kStaticWidth = 120;
inline constexpr std::size_t kPerformanceWidth = 20;
inline constexpr std::size_t kCauseCount = 15;

struct ConvBlockSpec {
  std::size_t filters;
  std::size_t width;
};
inline constexpr std::array<ConvBlockSpec, 3> kStaticConvBlocks{{{8, 11}, {16, 5}, {32, 3}}};
inline constexpr std::size_t kStaticPoolWindow = 2;
inline constexpr std::size_t kStaticPoolStride = 2;
inline constexpr std::size_t kStaticOut = 50;

inline constexpr std::size_t kTemporalLstm1 = 75;
inline constexpr std::size_t kTemporalLstm2 = 55;
inline constexpr std::size_t kTemporalDense = 50;
inline constexpr std::size_t kTemporalOut = 40;

/// Which encoders feed the fused representation. Disabling some reproduces
/// the structured-only and notes-only ablations.
struct Modalities {
  bool temporal = true;
  bool static_info = true;
  bool notes = true;

  bool any() const { return temporal || static_info || notes; }
  std::string to_string() const;
  static Modalities parse(const std::string& s);
  friend bool operator==(const Modalities&, const Modalities&) = default;
};

struct ModelConfig {
  std::size_t note_dim = 64;
  std::size_t hidden_note = 32;
  std::size_t head_width = 32;
  double dropout_rate = 0.2;
  ops::Activation activation = ops::Activation::relu;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.9;
  Modalities modalities;

  std::size_t note_width() const { return 2 * hidden_note; }
  /// |z| = 40 + 50 + 2 * hidden_note with every modality on.
  std::size_t fused_width() const;

  std::map<std::string, std::string> to_meta() const;
  static ModelConfig from_meta(const std::map<std::string, std::string>& meta);
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace msnf

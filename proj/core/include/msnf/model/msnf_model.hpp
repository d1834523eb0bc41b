// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msnf/engine/checkpoint.hpp"
#include "msnf/model/cascade.hpp"
#include "msnf/model/encoders.hpp"
#include "msnf/model/inputs.hpp"

namespace msnf {

/// Encoders, fusion and cascade heads over one ParameterStore. Copying a
/// model copies its parameters; the layer handles stay valid.
class MsnfModel {
 public:
  MsnfModel(const ModelConfig& config, std::uint64_t seed);

  /// Rebuilds the architecture from checkpoint metadata and loads every tensor.
  static MsnfModel from_checkpoint(const Checkpoint& ckpt);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const CascadeHeads& heads() const { return heads_; }

  /// Per-variable standardization of the performance features.
  void fit_scaler(std::span<const EncodedStudent> students);
  EncoderBatch make_batch(std::span<const EncodedStudent* const> students) const;

  struct Graph {
    std::optional<Var> z_temporal, z_static, z_note;
    Var z;
    CascadeHeads::Vars heads;
  };
  Graph forward(Tape& tape, const EncoderBatch& batch, ops::Mode mode, Rng& rng);

  // Single-student inference.
  std::vector<double> encode_static(const StaticInput& input);
  std::vector<double> encode_temporal(const PerformanceSequence& input);
  std::vector<double> encode_notes(const NoteSequence& input);
  FusedRepresentation represent(const EncodedStudent& student);

  std::vector<TaskOutputs> predict(std::span<const EncodedStudent> students, std::size_t batch_size = 256);

  std::map<std::string, std::string> metadata() const { return config_.to_meta(); }
  void save(const std::filesystem::path& path, std::map<std::string, std::string> extra = {}) const;

 private:
  ModelConfig config_;
  ParameterStore store_;
  std::optional<StaticEncoder> static_;
  std::optional<TemporalEncoder> temporal_;
  std::optional<NoteEncoder> notes_;
  CascadeHeads heads_;
  ParamRef scaler_mean_, scaler_std_;
};

}  // namespace msnf

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msnf/engine/tensor.hpp"
#include "msnf/model/cascade.hpp"

namespace msnf {

struct StaticInput {
  std::vector<double> onehot;  // kStaticWidth entries in {0, 1}
  void validate() const;
  friend bool operator==(const StaticInput&, const StaticInput&) = default;
};

struct PerformanceSequence {
  std::vector<std::vector<double>> semesters;  // each kPerformanceWidth wide
  void validate() const;
  friend bool operator==(const PerformanceSequence&, const PerformanceSequence&) = default;
};

/// Note embeddings in time order; may be empty.
struct NoteSequence {
  std::vector<std::vector<double>> notes;
  void validate(std::size_t dim) const;
};

/// Everything the network consumes for one student, after note embedding.
/// Performance values are raw; the model's feature scaler standardizes them.
struct EncodedStudent {
  std::string id;
  StaticInput static_input;
  PerformanceSequence performance;
  NoteSequence notes;
  TaskLabels labels;
  bool privileged = true;
};

/// Packed inputs for a mini-batch.
struct EncoderBatch {
  std::size_t size = 0;
  Tensor static_onehot;  // [B, 120, 1]
  Tensor performance;    // [S, 20], standardized
  std::vector<std::size_t> perf_offsets;
  std::optional<Tensor> notes;  // [M, note_dim], absent when M = 0
  std::vector<std::size_t> note_offsets;
};

}  // namespace msnf

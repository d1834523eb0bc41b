// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msnf/model/msnf_model.hpp"

namespace msnf {

struct BinaryConfusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  void add(bool truth, bool predicted);
  std::size_t total() const { return tp + tn + fp + fn; }
  /// (TP + TN) / (TP + TN + FP + FN); empty when there are no samples.
  std::optional<double> accuracy() const;
};

struct StudentPrediction {
  TaskLabels labels;
  std::size_t note_count = 0;
  bool privileged = true;
  double p_dropout = 0.0;
  bool fd = false, td = false, nd = false;
  double dd = 0.0;
  std::size_t cd = 0;
};

StudentPrediction to_prediction(const EncodedStudent& student, const TaskOutputs& out);
std::vector<StudentPrediction> predict_students(MsnfModel& model, std::span<const EncodedStudent> students);

/// Accuracy for FD/TD/ND/CD, RMSD for DD. Absent when no sample defines the task.
struct TaskMetric {
  std::optional<double> value;
  std::size_t n = 0;
};

struct CauseAccuracy {
  std::size_t cause = 0;
  std::size_t n = 0;
  double accuracy = 0.0;
};

struct NoteBucket {
  std::size_t lo = 0;
  std::optional<std::size_t> hi;  // inclusive; open-ended when empty
  std::size_t n = 0;
  std::array<TaskMetric, kTaskCount> tasks;
  std::string label() const;
};

struct EvaluationReport {
  std::size_t n = 0;
  std::array<TaskMetric, kTaskCount> tasks;
  /// RMSD of predicting the mean duration of the evaluated DD samples.
  std::optional<double> dd_mean_baseline;
  std::vector<CauseAccuracy> per_cause;  // causes present in the data only
  std::vector<NoteBucket> note_buckets;
};

/// Bucket lower edges, ascending from 0; the last bucket is open-ended.
inline const std::vector<std::size_t> kDefaultNoteBucketEdges{0, 1, 2, 3, 5, 8};

/// FD over everyone, TD over dropouts, ND and DD over the rows whose mask
/// enables them, CD over every dropout with a recorded cause.
EvaluationReport summarize(std::span<const StudentPrediction> predictions, const MaskOptions& mask = {},
                           std::span<const std::size_t> bucket_edges = kDefaultNoteBucketEdges);

EvaluationReport evaluate(MsnfModel& model, std::span<const EncodedStudent> students, const MaskOptions& mask = {},
                          std::span<const std::size_t> bucket_edges = kDefaultNoteBucketEdges);

}  // namespace msnf

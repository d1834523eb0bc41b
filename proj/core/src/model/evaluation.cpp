// SPDX-License-Identifier: Apache-2.0
#include "msnf/model/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "msnf/error.hpp"

namespace msnf {

void BinaryConfusion::add(bool truth, bool predicted) {
  if (truth) {
    ++(predicted ? tp : fn);
  } else {
    ++(predicted ? fp : tn);
  }
}

std::optional<double> BinaryConfusion::accuracy() const {
  if (total() == 0) return std::nullopt;
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

StudentPrediction to_prediction(const EncodedStudent& student, const TaskOutputs& out) {
  StudentPrediction p;
  p.labels = student.labels;
  p.note_count = student.notes.notes.size();
  p.privileged = student.privileged;
  p.p_dropout = out.p1[1];
  p.fd = out.p1[1] > out.p1[0];
  p.td = out.p2[1] > out.p2[0];
  p.nd = out.p3[1] > out.p3[0];
  p.dd = out.y4_hat;
  p.cd = static_cast<std::size_t>(std::max_element(out.p5.begin(), out.p5.end()) - out.p5.begin());
  return p;
}

std::vector<StudentPrediction> predict_students(MsnfModel& model, std::span<const EncodedStudent> students) {
  const auto outputs = model.predict(students);
  std::vector<StudentPrediction> preds;
  preds.reserve(students.size());
  for (std::size_t i = 0; i < students.size(); ++i) preds.push_back(to_prediction(students[i], outputs[i]));
  return preds;
}

std::string NoteBucket::label() const {
  if (!hi) return std::to_string(lo) + "+";
  if (*hi == lo) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(*hi);
}

namespace {

struct Accumulator {
  BinaryConfusion fd, td, nd;
  std::size_t cd_n = 0, cd_hit = 0;
  std::size_t dd_n = 0;
  double dd_sq = 0.0;

  void add(const StudentPrediction& p, const MaskOptions& mask) {
    const TaskLabels& y = p.labels;
    const TaskMask m = derive_mask(y, mask);
    fd.add(y.dropout, p.fd);
    if (m[kTD]) td.add(*y.temporary, p.td);
    if (m[kND]) nd.add(*y.next_semester, p.nd);
    if (m[kDD]) {
      dd_sq += (p.dd - *y.duration) * (p.dd - *y.duration);
      ++dd_n;
    }
    if (y.dropout && y.cause) {
      ++cd_n;
      cd_hit += p.cd == *y.cause ? 1 : 0;
    }
  }

  std::array<TaskMetric, kTaskCount> metrics() const {
    std::array<TaskMetric, kTaskCount> t;
    t[kFD] = {fd.accuracy(), fd.total()};
    t[kTD] = {td.accuracy(), td.total()};
    t[kND] = {nd.accuracy(), nd.total()};
    if (dd_n > 0) t[kDD].value = std::sqrt(dd_sq / static_cast<double>(dd_n));
    t[kDD].n = dd_n;
    if (cd_n > 0) t[kCD].value = static_cast<double>(cd_hit) / static_cast<double>(cd_n);
    t[kCD].n = cd_n;
    return t;
  }
};

}  // namespace

EvaluationReport summarize(std::span<const StudentPrediction> predictions, const MaskOptions& mask,
                           std::span<const std::size_t> edges) {
  if (edges.empty() || edges.front() != 0 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ParameterError("note bucket edges must start at 0 and strictly increase");
  }
  EvaluationReport r;
  r.n = predictions.size();

  Accumulator all;
  std::vector<Accumulator> buckets(edges.size());
  std::vector<std::size_t> bucket_n(edges.size(), 0);
  std::array<std::size_t, kCauseCount> cause_n{}, cause_hit{};
  double dd_sum = 0.0;
  std::vector<double> dd_targets;

  for (const auto& p : predictions) {
    all.add(p, mask);
    const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), p.note_count) -
                                            edges.begin()) - 1;
    buckets[b].add(p, mask);
    ++bucket_n[b];
    if (p.labels.dropout && p.labels.cause) {
      ++cause_n[*p.labels.cause];
      cause_hit[*p.labels.cause] += p.cd == *p.labels.cause ? 1 : 0;
    }
    if (derive_mask(p.labels, mask)[kDD]) {
      dd_sum += *p.labels.duration;
      dd_targets.push_back(*p.labels.duration);
    }
  }

  r.tasks = all.metrics();
  if (!dd_targets.empty()) {
    const double mean = dd_sum / static_cast<double>(dd_targets.size());
    double sq = 0.0;
    for (double y : dd_targets) sq += (y - mean) * (y - mean);
    r.dd_mean_baseline = std::sqrt(sq / static_cast<double>(dd_targets.size()));
  }
  for (std::size_t c = 0; c < kCauseCount; ++c) {
    if (cause_n[c] == 0) continue;
    r.per_cause.push_back({c, cause_n[c], static_cast<double>(cause_hit[c]) / static_cast<double>(cause_n[c])});
  }
  for (std::size_t b = 0; b < edges.size(); ++b) {
    NoteBucket nb;
    nb.lo = edges[b];
    if (b + 1 < edges.size()) nb.hi = edges[b + 1] - 1;
    nb.n = bucket_n[b];
    nb.tasks = buckets[b].metrics();
    r.note_buckets.push_back(nb);
  }
  return r;
}

EvaluationReport evaluate(MsnfModel& model, std::span<const EncodedStudent> students, const MaskOptions& mask,
                          std::span<const std::size_t> bucket_edges) {
  const auto preds = predict_students(model, students);
  return summarize(preds, mask, bucket_edges);
}

}  // namespace msnf

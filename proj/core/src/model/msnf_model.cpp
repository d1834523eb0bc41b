// SPDX-License-Identifier: Apache-2.0
#include "msnf/model/msnf_model.hpp"

#include <algorithm>
#include <cmath>

#include "msnf/error.hpp"

namespace msnf {

namespace {

std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::vector<double> row(const Tensor& t, std::size_t r) {
  const std::size_t w = t.dim(t.rank() - 1);
  auto v = t.values().subspan(r * w, w);
  return {v.begin(), v.end()};
}

}  // namespace

void StaticInput::validate() const {
  if (onehot.size() != kStaticWidth) {
    throw DimensionError("static input has length " + std::to_string(onehot.size()) + ", expected " +
                         std::to_string(kStaticWidth));
  }
  for (double v : onehot) {
    if (v != 0.0 && v != 1.0) throw ContractError("static one-hot entries must be 0 or 1");
  }
}

void PerformanceSequence::validate() const {
  if (semesters.empty()) throw SequenceLengthError("performance sequence is empty");
  for (const auto& s : semesters) {
    if (s.size() != kPerformanceWidth) {
      throw DimensionError("semester vector has width " + std::to_string(s.size()) + ", expected " +
                           std::to_string(kPerformanceWidth));
    }
    for (double v : s) {
      if (!std::isfinite(v)) throw ContractError("performance value is not finite");
    }
  }
}

void NoteSequence::validate(std::size_t dim) const {
  for (const auto& n : notes) {
    if (n.size() != dim) {
      throw DimensionError("note embedding has dim " + std::to_string(n.size()) + ", expected " +
                           std::to_string(dim));
    }
  }
}

MsnfModel::MsnfModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(seed, 0x1417));
  if (config_.modalities.temporal) temporal_ = TemporalEncoder::create(store_, config_, rng);
  if (config_.modalities.static_info) static_ = StaticEncoder::create(store_, config_, rng);
  if (config_.modalities.notes) notes_ = NoteEncoder::create(store_, config_, rng);
  heads_ = CascadeHeads::create(store_, config_.fused_width(), config_, rng);
  scaler_mean_ = store_.add("scaler.mean", Tensor({kPerformanceWidth}, 0.0), false);
  scaler_std_ = store_.add("scaler.std", Tensor({kPerformanceWidth}, 1.0), false);
}

MsnfModel MsnfModel::from_checkpoint(const Checkpoint& ckpt) {
  MsnfModel m(ModelConfig::from_meta(ckpt.meta), 0);
  load_into(ckpt, m.store_);
  return m;
}

void MsnfModel::fit_scaler(std::span<const EncodedStudent> students) {
  std::vector<double> mean(kPerformanceWidth, 0.0), sq(kPerformanceWidth, 0.0);
  std::size_t rows = 0;
  for (const auto& s : students) {
    for (const auto& sem : s.performance.semesters) {
      for (std::size_t j = 0; j < kPerformanceWidth; ++j) mean[j] += sem.at(j);
      ++rows;
    }
  }
  if (rows == 0) throw EmptyBatchError("cannot fit the feature scaler on zero semesters");
  for (auto& m : mean) m /= static_cast<double>(rows);
  for (const auto& s : students) {
    for (const auto& sem : s.performance.semesters) {
      for (std::size_t j = 0; j < kPerformanceWidth; ++j) sq[j] += (sem[j] - mean[j]) * (sem[j] - mean[j]);
    }
  }
  auto mv = store_.at(scaler_mean_).value.values();
  auto sv = store_.at(scaler_std_).value.values();
  for (std::size_t j = 0; j < kPerformanceWidth; ++j) {
    const double sd = std::sqrt(sq[j] / static_cast<double>(rows));
    mv[j] = mean[j];
    sv[j] = sd > 1e-9 ? sd : 1.0;
  }
}

EncoderBatch MsnfModel::make_batch(std::span<const EncodedStudent* const> students) const {
  if (students.empty()) throw EmptyBatchError("empty batch");
  EncoderBatch b;
  b.size = students.size();
  const std::size_t dim = config_.note_dim;
  auto mean = store_.at(scaler_mean_).value.values();
  auto sd = store_.at(scaler_std_).value.values();

  std::vector<double> onehot, perf, notes;
  onehot.reserve(b.size * kStaticWidth);
  b.perf_offsets.push_back(0);
  b.note_offsets.push_back(0);
  for (const EncodedStudent* s : students) {
    if (config_.modalities.static_info) {
      s->static_input.validate();
      onehot.insert(onehot.end(), s->static_input.onehot.begin(), s->static_input.onehot.end());
    }
    if (config_.modalities.temporal) {
      s->performance.validate();
      for (const auto& sem : s->performance.semesters) {
        for (std::size_t j = 0; j < kPerformanceWidth; ++j) perf.push_back((sem[j] - mean[j]) / sd[j]);
      }
      b.perf_offsets.push_back(b.perf_offsets.back() + s->performance.semesters.size());
    }
    if (config_.modalities.notes) {
      s->notes.validate(dim);
      for (const auto& n : s->notes.notes) notes.insert(notes.end(), n.begin(), n.end());
      b.note_offsets.push_back(b.note_offsets.back() + s->notes.notes.size());
    }
  }
  if (config_.modalities.static_info) b.static_onehot = Tensor({b.size, kStaticWidth, 1}, std::move(onehot));
  if (config_.modalities.temporal) {
    b.performance = Tensor({b.perf_offsets.back(), kPerformanceWidth}, std::move(perf));
  }
  if (config_.modalities.notes && b.note_offsets.back() > 0) {
    b.notes = Tensor({b.note_offsets.back(), dim}, std::move(notes));
  }
  return b;
}

MsnfModel::Graph MsnfModel::forward(Tape& tape, const EncoderBatch& batch, ops::Mode mode, Rng& rng) {
  Graph g;
  std::vector<Var> parts;
  if (temporal_) {
    g.z_temporal = temporal_->forward(tape, store_, tape.constant(batch.performance), batch.perf_offsets, mode, rng);
    parts.push_back(*g.z_temporal);
  }
  if (static_) {
    g.z_static = static_->forward(tape, store_, tape.constant(batch.static_onehot), mode, rng);
    parts.push_back(*g.z_static);
  }
  if (notes_) {
    std::optional<Var> packed;
    if (batch.notes) packed = tape.constant(*batch.notes);
    g.z_note = notes_->forward(tape, store_, packed ? &*packed : nullptr, batch.note_offsets);
    parts.push_back(*g.z_note);
  }
  g.z = parts.size() == 1 ? parts.front() : ops::concat_columns(tape, parts);
  g.heads = heads_.forward(tape, store_, g.z);
  return g;
}

std::vector<double> MsnfModel::encode_static(const StaticInput& input) {
  if (!static_) throw ContractError("static modality is disabled in this model");
  input.validate();
  Tape tape(false);
  Rng rng(0);
  Var x = tape.constant(Tensor({1, kStaticWidth, 1}, input.onehot));
  return to_vector(tape.value(static_->forward(tape, store_, x, ops::Mode::infer, rng)));
}

std::vector<double> MsnfModel::encode_temporal(const PerformanceSequence& input) {
  if (!temporal_) throw ContractError("temporal modality is disabled in this model");
  input.validate();
  auto mean = store_.at(scaler_mean_).value.values();
  auto sd = store_.at(scaler_std_).value.values();
  std::vector<double> flat;
  for (const auto& sem : input.semesters) {
    for (std::size_t j = 0; j < kPerformanceWidth; ++j) flat.push_back((sem[j] - mean[j]) / sd[j]);
  }
  const std::size_t offsets[2] = {0, input.semesters.size()};
  Tape tape(false);
  Rng rng(0);
  Var x = tape.constant(Tensor({input.semesters.size(), kPerformanceWidth}, std::move(flat)));
  return to_vector(tape.value(temporal_->forward(tape, store_, x, offsets, ops::Mode::infer, rng)));
}

std::vector<double> MsnfModel::encode_notes(const NoteSequence& input) {
  if (!notes_) throw ContractError("notes modality is disabled in this model");
  input.validate(config_.note_dim);
  Tape tape(false);
  const std::size_t offsets[2] = {0, input.notes.size()};
  std::optional<Var> packed;
  if (!input.notes.empty()) {
    std::vector<double> flat;
    for (const auto& n : input.notes) flat.insert(flat.end(), n.begin(), n.end());
    packed = tape.constant(Tensor({input.notes.size(), config_.note_dim}, std::move(flat)));
  }
  return to_vector(tape.value(notes_->forward(tape, store_, packed ? &*packed : nullptr, offsets)));
}

FusedRepresentation MsnfModel::represent(const EncodedStudent& student) {
  const EncodedStudent* ptr = &student;
  EncoderBatch b = make_batch(std::span(&ptr, 1));
  Tape tape(false);
  Rng rng(0);
  Graph g = forward(tape, b, ops::Mode::infer, rng);
  auto part = [&](const std::optional<Var>& v) { return v ? to_vector(tape.value(*v)) : std::vector<double>{}; };
  return fuse(part(g.z_temporal), part(g.z_static), part(g.z_note), config_);
}

std::vector<TaskOutputs> MsnfModel::predict(std::span<const EncodedStudent> students, std::size_t batch_size) {
  if (batch_size == 0) throw ParameterError("prediction batch size must be positive");
  std::vector<TaskOutputs> out;
  out.reserve(students.size());
  Rng rng(0);
  for (std::size_t start = 0; start < students.size(); start += batch_size) {
    const std::size_t end = std::min(students.size(), start + batch_size);
    std::vector<const EncodedStudent*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&students[i]);
    EncoderBatch b = make_batch(ptrs);
    Tape tape(false);
    Graph g = forward(tape, b, ops::Mode::infer, rng);
    for (std::size_t r = 0; r < ptrs.size(); ++r) {
      TaskOutputs o;
      auto p1 = row(tape.value(g.heads.out[kFD]), r);
      auto p2 = row(tape.value(g.heads.out[kTD]), r);
      auto p3 = row(tape.value(g.heads.out[kND]), r);
      o.p1 = {p1[0], p1[1]};
      o.p2 = {p2[0], p2[1]};
      o.p3 = {p3[0], p3[1]};
      o.y4_hat = tape.value(g.heads.out[kDD]).values()[r];
      o.p5 = row(tape.value(g.heads.out[kCD]), r);
      for (std::size_t k = 0; k < kTaskCount; ++k) o.hidden[k] = row(tape.value(g.heads.hidden[k]), r);
      out.push_back(std::move(o));
    }
  }
  return out;
}

void MsnfModel::save(const std::filesystem::path& path, std::map<std::string, std::string> extra) const {
  auto meta = metadata();
  meta.merge(extra);
  write_checkpoint(path, meta, store_);
}

}  // namespace msnf

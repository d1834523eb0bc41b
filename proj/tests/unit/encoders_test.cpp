// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "msnf/engine/checkpoint.hpp"
#include "msnf/error.hpp"
#include "msnf/model/msnf_model.hpp"
#include "test_support.hpp"

namespace msnf {
namespace {

Shape shape_of(const ParameterStore& s, const std::string& name) { return s.at(name).value.shape(); }

PerformanceSequence random_semesters(std::size_t n, Rng& rng) {
  PerformanceSequence p;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> row(kPerformanceWidth);
    for (auto& v : row) v = uniform(rng, -2.0, 2.0);
    p.semesters.push_back(row);
  }
  return p;
}

NoteSequence random_notes(std::size_t n, std::size_t dim, Rng& rng) {
  NoteSequence s;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = uniform(rng, -1.0, 1.0);
    s.notes.push_back(v);
  }
  return s;
}

StaticInput some_onehot(std::size_t seed) {
  StaticInput s{std::vector<double>(kStaticWidth, 0.0)};
  for (std::size_t i = seed % 7; i < kStaticWidth; i += 9) s.onehot[i] = 1.0;
  return s;
}

TEST(Architecture, ParameterShapesMatchTheDesign) {
  MsnfModel m(ModelConfig{}, 1);
  const auto& s = m.params();
  EXPECT_EQ(shape_of(s, "static.conv1.weight"), (Shape{8, 1, 11}));
  EXPECT_EQ(shape_of(s, "static.conv2.weight"), (Shape{16, 8, 5}));
  EXPECT_EQ(shape_of(s, "static.conv3.weight"), (Shape{32, 16, 3}));
  EXPECT_EQ(shape_of(s, "static.dense.weight"), (Shape{50, 15 * 32}));
  EXPECT_EQ(shape_of(s, "temporal.lstm1.weight"), (Shape{4, 75, 20 + 75}));
  EXPECT_EQ(shape_of(s, "temporal.lstm2.weight"), (Shape{4, 55, 75 + 55}));
  EXPECT_EQ(shape_of(s, "temporal.dense1.weight"), (Shape{50, 55}));
  EXPECT_EQ(shape_of(s, "temporal.dense2.weight"), (Shape{40, 50}));
  EXPECT_EQ(shape_of(s, "notes.bilstm.forward.weight"), (Shape{4, 32, 64 + 32}));
  EXPECT_EQ(shape_of(s, "notes.bilstm.empty_default"), (Shape{64}));
  EXPECT_EQ(shape_of(s, "head1.hidden.weight"), (Shape{32, 154}));
  EXPECT_EQ(shape_of(s, "head2.hidden.weight"), (Shape{32, 154 + 32}));
  EXPECT_EQ(shape_of(s, "head4.out.weight"), (Shape{1, 32}));
  EXPECT_EQ(shape_of(s, "head5.out.weight"), (Shape{15, 32}));
  EXPECT_FALSE(s.at("scaler.mean").trainable);
  EXPECT_FALSE(s.at("static.bn1.running_mean").trainable);
}

TEST(Encoders, OutputWidths) {
  Rng rng(2);
  MsnfModel m(ModelConfig{}, 2);
  EXPECT_EQ(m.encode_static(some_onehot(1)).size(), 50u);
  EXPECT_EQ(m.encode_temporal(random_semesters(4, rng)).size(), 40u);
  EXPECT_EQ(m.encode_notes(random_notes(3, 64, rng)).size(), 64u);
  EncodedStudent st{"s", some_onehot(2), random_semesters(2, rng), random_notes(1, 64, rng), {}, true};
  const auto z = m.represent(st);
  EXPECT_EQ(z.z.size(), 154u);
  EXPECT_EQ(z.z_temporal.size(), 40u);
  EXPECT_EQ(z.z_static.size(), 50u);
  EXPECT_EQ(z.z_note.size(), 64u);
}

TEST(Encoders, ZeroInputGivesZeroFeatures) {
  // fresh model: zero biases, identity batch-norm statistics, relu(0) = 0
  MsnfModel m(ModelConfig{}, 3);
  for (double v : m.encode_static(StaticInput{std::vector<double>(kStaticWidth, 0.0)})) EXPECT_EQ(v, 0.0);
  PerformanceSequence zeros;
  zeros.semesters.assign(3, std::vector<double>(kPerformanceWidth, 0.0));
  for (double v : m.encode_temporal(zeros)) EXPECT_EQ(v, 0.0);
}

TEST(Encoders, TemporalIsOrderSensitive) {
  Rng rng(4);
  MsnfModel m(ModelConfig{}, 4);
  auto p = random_semesters(5, rng);
  const auto a = m.encode_temporal(p);
  std::reverse(p.semesters.begin(), p.semesters.end());
  EXPECT_NE(a, m.encode_temporal(p));
}

TEST(Encoders, StaticDependsOnTheCategories) {
  MsnfModel m(ModelConfig{}, 5);
  EXPECT_NE(m.encode_static(some_onehot(1)), m.encode_static(some_onehot(2)));
}

TEST(Encoders, EmptyNotesUseTheLearnedDefault) {
  MsnfModel m(ModelConfig{}, 6);
  auto& def = m.params().at("notes.bilstm.empty_default").value;
  for (std::size_t i = 0; i < def.size(); ++i) def[i] = 0.01 * static_cast<double>(i);
  const auto z = m.encode_notes(NoteSequence{});
  ASSERT_EQ(z.size(), def.size());
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z[i], def[i]);
}

TEST(Encoders, ForwardHalfOfNoteMaxPoolGrowsWithPrefix) {
  // appending a note leaves earlier forward states unchanged, so their running max can only rise
  Rng rng(7);
  ModelConfig cfg;
  MsnfModel m(cfg, 7);
  const auto all = random_notes(6, cfg.note_dim, rng);
  std::vector<double> prev;
  for (std::size_t k = 1; k <= all.notes.size(); ++k) {
    NoteSequence prefix;
    prefix.notes.assign(all.notes.begin(), all.notes.begin() + static_cast<std::ptrdiff_t>(k));
    const auto z = m.encode_notes(prefix);
    if (!prev.empty()) {
      for (std::size_t j = 0; j < cfg.hidden_note; ++j) EXPECT_GE(z[j], prev[j]) << "prefix " << k << " unit " << j;
    }
    prev = z;
  }
}

TEST(Encoders, WrongWidthsAreRejected) {
  MsnfModel m(ModelConfig{}, 8);
  EXPECT_THROW(m.encode_static(StaticInput{std::vector<double>(119, 0.0)}), DimensionError);
  PerformanceSequence p;
  p.semesters.assign(2, std::vector<double>(19, 0.0));
  EXPECT_THROW(m.encode_temporal(p), DimensionError);
  EXPECT_THROW(m.encode_temporal(PerformanceSequence{}), SequenceLengthError);
  NoteSequence n;
  n.notes.assign(1, std::vector<double>(10, 0.0));
  EXPECT_THROW(m.encode_notes(n), DimensionError);
}

TEST(Fuse, ConcatenatesTemporalStaticNotes) {
  ModelConfig cfg;
  const std::vector<double> t(40, 1.0), s(50, 2.0), n(64, 3.0);
  const auto f = fuse(t, s, n, cfg);
  ASSERT_EQ(f.z.size(), 154u);
  EXPECT_EQ(f.z[0], 1.0);
  EXPECT_EQ(f.z[39], 1.0);
  EXPECT_EQ(f.z[40], 2.0);
  EXPECT_EQ(f.z[89], 2.0);
  EXPECT_EQ(f.z[90], 3.0);
  EXPECT_THROW(fuse(std::vector<double>(39), s, n, cfg), DimensionError);
  cfg.modalities = Modalities::parse("temporal,notes");
  EXPECT_EQ(fuse(t, {}, n, cfg).z.size(), 104u);
  EXPECT_THROW(fuse(t, s, n, cfg), DimensionError);
}

TEST(Modalities, ParseAndWidths) {
  ModelConfig cfg;
  cfg.modalities = Modalities::parse("notes");
  EXPECT_EQ(cfg.fused_width(), 64u);
  cfg.modalities = Modalities::parse("temporal,static");
  EXPECT_EQ(cfg.fused_width(), 90u);
  EXPECT_EQ(cfg.modalities.to_string(), "temporal,static");
  EXPECT_THROW(Modalities::parse("audio"), ParameterError);
  MsnfModel m(cfg, 9);
  EXPECT_FALSE(m.params().contains("notes.bilstm.empty_default"));
  EXPECT_THROW(m.encode_notes(NoteSequence{}), ContractError);
}

TEST(Model, CheckpointReloadPredictsIdentically) {
  Rng rng(10);
  ModelConfig cfg;
  cfg.note_dim = 8;
  cfg.hidden_note = 4;
  MsnfModel m(cfg, 10);
  std::vector<EncodedStudent> batch;
  for (std::size_t i = 0; i < 3; ++i) {
    batch.push_back({"s" + std::to_string(i), some_onehot(i), random_semesters(1 + i, rng), random_notes(i, 8, rng),
                     {}, i % 2 == 0});
  }
  m.fit_scaler(batch);
  std::stringstream ss;
  write_checkpoint(ss, m.metadata(), m.params());
  MsnfModel back = MsnfModel::from_checkpoint(read_checkpoint(ss));
  EXPECT_EQ(back.config().note_dim, 8u);
  const auto a = m.predict(batch), b = back.predict(batch);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].p1, b[i].p1);
    EXPECT_EQ(a[i].y4_hat, b[i].y4_hat);
    EXPECT_EQ(a[i].p5, b[i].p5);
  }
}

TEST(Model, CopiesAreIndependent) {
  MsnfModel a(ModelConfig{}, 11);
  MsnfModel b = a;
  b.params().at("static.dense.bias").value[0] = 5.0;
  EXPECT_EQ(a.params().at("static.dense.bias").value[0], 0.0);
  EXPECT_NE(a.encode_static(some_onehot(3)), b.encode_static(some_onehot(3)));
}

}  // namespace
}  // namespace msnf

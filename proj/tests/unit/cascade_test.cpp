// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "msnf/error.hpp"
#include "msnf/model/cascade.hpp"
#include "test_support.hpp"

namespace msnf {
namespace {

using testing::random_tensor;

TaskLabels non_dropout() { return TaskLabels{}; }

TaskLabels dropout(bool temporary, bool next, double duration, std::size_t cause) {
  TaskLabels y;
  y.dropout = true;
  y.temporary = temporary;
  y.next_semester = next;
  y.duration = duration;
  y.cause = cause;
  return y;
}

TEST(Mask, FourCases) {
  const MaskOptions on{true}, off{false};
  EXPECT_EQ(derive_mask(non_dropout(), on), (TaskMask{true, false, false, false, false}));
  EXPECT_EQ(derive_mask(dropout(false, true, 3, 0), on), (TaskMask{true, true, false, false, false}));
  EXPECT_EQ(derive_mask(dropout(true, true, 2, 1), on), (TaskMask{true, true, true, false, false}));
  EXPECT_EQ(derive_mask(dropout(true, false, 4, 1), on), (TaskMask{true, true, true, true, true}));
  // without the third rule a next-semester temporary dropout trains every head
  EXPECT_EQ(derive_mask(dropout(true, true, 2, 1), off), (TaskMask{true, true, true, true, true}));
}

TEST(Mask, MissingLabelIsAContractError) {
  TaskLabels y = dropout(true, false, 2, 3);
  y.cause.reset();
  EXPECT_THROW(derive_mask(y), ContractError);
  TaskLabels p;
  p.dropout = true;
  EXPECT_THROW(derive_mask(p), ContractError);
}

TEST(Losses, CrossEntropyAndEuclidean) {
  const std::vector<double> p{0.2, 0.8};
  EXPECT_NEAR(cross_entropy(p, 1), -std::log(0.8), 1e-15);
  const std::vector<double> zero{1.0, 0.0};
  EXPECT_NEAR(cross_entropy(zero, 1), -std::log(1e-12), 1e-9);
  EXPECT_EQ(euclidean_loss(3.5, 2.0), 2.25);
}

TEST(Losses, LossTermsFollowTheMask) {
  TaskOutputs o;
  o.p1 = {0.3, 0.7};
  o.p2 = {0.6, 0.4};
  o.p3 = {0.1, 0.9};
  o.y4_hat = 2.5;
  o.p5.assign(kCauseCount, 0.5 / (kCauseCount - 1));
  o.p5[4] = 0.5;
  const TaskLabels perm = dropout(false, true, 3.0, 4);
  const LossTerms t = loss_terms(o, perm);
  EXPECT_EQ(t.mask, (TaskMask{true, true, false, false, false}));
  EXPECT_NEAR(t.total, -std::log(0.7) - std::log(0.6), 1e-12);
  const TaskLabels temp = dropout(true, true, 3.0, 4);
  const double all = -std::log(0.7) - std::log(0.4) - std::log(0.9) + 0.25 - std::log(0.5);
  EXPECT_NEAR(total_loss(o, temp), all, 1e-12);
  EXPECT_NEAR(total_loss(o, non_dropout()), -std::log(0.3), 1e-12);
}

struct HeadsFixture {
  ParameterStore store;
  CascadeHeads heads;
  Tensor z;
  explicit HeadsFixture(std::uint64_t seed, std::size_t rows = 1) {
    Rng rng(seed);
    ModelConfig cfg;
    cfg.head_width = 6;
    heads = CascadeHeads::create(store, 9, cfg, rng);
    z = random_tensor({rows, 9}, rng);
    // nonzero biases so relu units are alive and every head has a gradient path
    for (auto& p : store.entries()) {
      if (p.name.ends_with(".bias")) {
        for (auto& v : p.value.values()) v = uniform(rng, 0.1, 0.5);
      }
    }
  }
};

TaskOutputs read_outputs(const Tape& tape, const CascadeHeads::Vars& v, std::size_t row) {
  TaskOutputs o;
  for (std::size_t c = 0; c < 2; ++c) {
    o.p1[c] = tape.value(v.out[kFD]).at(row, c);
    o.p2[c] = tape.value(v.out[kTD]).at(row, c);
    o.p3[c] = tape.value(v.out[kND]).at(row, c);
  }
  o.y4_hat = tape.value(v.out[kDD]).at(row, 0);
  for (std::size_t c = 0; c < kCauseCount; ++c) o.p5.push_back(tape.value(v.out[kCD]).at(row, c));
  return o;
}

// Masking suite: one case per strategy, checked against a hand-written mask table.
class MaskingSuite : public ::testing::TestWithParam<int> {};

TEST_P(MaskingSuite, MaskedHeadsGetExactlyZeroGradient) {
  const MaskOptions opt{true};
  TaskLabels y;
  TaskMask expect{};
  switch (GetParam()) {
    case 0: y = non_dropout(); expect = {true, false, false, false, false}; break;
    case 1: y = dropout(false, false, 4.0, 2); expect = {true, true, false, false, false}; break;
    case 2: y = dropout(true, true, 2.0, 7); expect = {true, true, true, false, false}; break;
    default: y = dropout(true, false, 5.0, 11); expect = {true, true, true, true, true}; break;
  }
  HeadsFixture f(100 + static_cast<std::uint64_t>(GetParam()));
  const TaskLabels* ptr = &y;
  const BatchTargets targets = BatchTargets::build(std::span(&ptr, 1), {}, opt);
  Tape tape;
  const auto vars = f.heads.forward(tape, f.store, tape.constant(f.z));
  const CascadeLoss loss = cascade_loss(tape, vars, targets);
  f.store.zero_grad();
  tape.backward(loss.total);

  for (std::size_t k = 0; k < kTaskCount; ++k) {
    // a head's own parameters are exclusive to it unless a later head reads its hidden layer
    bool used_downstream = false;
    for (std::size_t j = k + 1; j < kTaskCount; ++j) used_downstream |= expect[j];
    double mag = 0.0;
    for (ParamRef r : {f.heads.output_layer(k).weight, f.heads.output_layer(k).bias}) {
      for (double g : f.store.at(r).value.grad()) mag += std::abs(g);
    }
    if (!expect[k]) {
      EXPECT_EQ(mag, 0.0) << task_name(k) << " output layer";
    } else {
      EXPECT_GT(mag, 0.0) << task_name(k) << " output layer";
    }
    if (!expect[k] && !used_downstream) {
      for (ParamRef r : {f.heads.hidden_layer(k).weight, f.heads.hidden_layer(k).bias}) {
        for (double g : f.store.at(r).value.grad()) EXPECT_EQ(g, 0.0) << task_name(k) << " hidden layer";
      }
    }
  }

  // total equals the independently summed masked terms
  const TaskOutputs o = read_outputs(tape, vars, 0);
  double oracle = 0.0;
  if (expect[kFD]) oracle += -std::log(o.p1[y.dropout ? 1 : 0]);
  if (expect[kTD]) oracle += -std::log(o.p2[*y.temporary ? 1 : 0]);
  if (expect[kND]) oracle += -std::log(o.p3[*y.next_semester ? 1 : 0]);
  if (expect[kDD]) oracle += (o.y4_hat - *y.duration) * (o.y4_hat - *y.duration);
  if (expect[kCD]) oracle += -std::log(o.p5[*y.cause]);
  EXPECT_NEAR(tape.value(loss.total)[0], oracle, 1e-10);
  EXPECT_NEAR(total_loss(o, y, opt), oracle, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Strategies, MaskingSuite, ::testing::Range(0, 4));

TEST(Cascade, LaterHeadsReadEarlierHiddenLayers) {
  HeadsFixture f(7, 2);
  auto outputs = [&]() {
    Tape tape(false);
    const auto v = f.heads.forward(tape, f.store, tape.constant(f.z));
    std::array<std::vector<double>, kTaskCount> o;
    for (std::size_t k = 0; k < kTaskCount; ++k) {
      const auto vals = tape.value(v.out[k]).values();
      o[k].assign(vals.begin(), vals.end());
    }
    return o;
  };
  const auto base = outputs();
  for (auto& b : f.store.at(f.heads.hidden_layer(kTD).bias).value.values()) b += 0.7;
  const auto moved = outputs();
  EXPECT_EQ(base[kFD], moved[kFD]);
  EXPECT_NE(base[kTD], moved[kTD]);
  EXPECT_NE(base[kND], moved[kND]);  // reads h_TD
  EXPECT_NE(base[kCD], moved[kCD]);  // through h_ND and h_DD
}

TEST(Cascade, OutputShapesAndProbabilities) {
  HeadsFixture f(8, 3);
  Tape tape(false);
  const auto v = f.heads.forward(tape, f.store, tape.constant(f.z));
  EXPECT_EQ(tape.value(v.out[kFD]).shape(), (Shape{3, 2}));
  EXPECT_EQ(tape.value(v.out[kDD]).shape(), (Shape{3, 1}));
  EXPECT_EQ(tape.value(v.out[kCD]).shape(), (Shape{3, 15}));
  EXPECT_EQ(tape.value(v.hidden[kND]).shape(), (Shape{3, 6}));
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < kCauseCount; ++c) s += tape.value(v.out[kCD]).at(r, c);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(BatchTargets, SampleWeightsScaleUnmaskedRows) {
  const TaskLabels a = non_dropout(), b = dropout(true, false, 2.0, 5);
  const std::array<const TaskLabels*, 2> ptrs{&a, &b};
  const std::vector<double> w{2.0, 0.5};
  const auto t = BatchTargets::build(ptrs, w, {});
  EXPECT_EQ(t.weight[kFD], (std::vector<double>{2.0, 0.5}));
  EXPECT_EQ(t.weight[kCD], (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(t.cd[1], 5u);
  EXPECT_EQ(t.dd[1], 2.0);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(BatchTargets::build(ptrs, bad, {}), DimensionError);
}

TEST(BatchLoss, WeightedSumOverRows) {
  HeadsFixture f(9, 2);
  const TaskLabels a = non_dropout(), b = dropout(true, false, 3.0, 0);
  const std::array<const TaskLabels*, 2> ptrs{&a, &b};
  const std::vector<double> w{1.5, 0.25};
  Tape tape;
  const auto v = f.heads.forward(tape, f.store, tape.constant(f.z));
  const double got = tape.value(cascade_loss(tape, v, BatchTargets::build(ptrs, w, {})).total)[0];
  const double oracle = 1.5 * total_loss(read_outputs(tape, v, 0), a) + 0.25 * total_loss(read_outputs(tape, v, 1), b);
  EXPECT_NEAR(got, oracle, 1e-10);
}

TEST(Labels, ValidateRejectsInconsistentRecords) {
  TaskLabels y;
  y.cause = 2;
  EXPECT_THROW(y.validate(), Error);
  TaskLabels d = dropout(true, false, -1.0, 2);
  EXPECT_THROW(d.validate(), Error);
  TaskLabels c = dropout(true, false, 2.0, 99);
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(dropout(false, true, 1.0, 3).validate());
}

}  // namespace
}  // namespace msnf

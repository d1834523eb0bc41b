// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "msnf/engine/layers.hpp"
#include "msnf/engine/ops.hpp"
#include "msnf/error.hpp"
#include "test_support.hpp"

namespace msnf {
namespace {

using ops::Activation;
using ops::Mode;
using ops::Padding;
using testing::random_tensor;

TEST(Conv1d, ZeroInputZeroBiasGivesZeros) {
  Rng rng(1);
  Tape tape(false);
  auto x = tape.constant(Tensor({20, 3}));
  auto w = tape.constant(random_tensor({4, 3, 5}, rng));
  auto b = tape.constant(Tensor({4}));
  for (auto pad : {Padding::same, Padding::valid}) {
    for (double v : tape.value(ops::conv1d(tape, x, w, b, pad)).values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Conv1d, StaticEncoderFirstLayerShape) {
  Rng rng(2);
  Tape tape(false);
  auto x = tape.constant(random_tensor({120, 1}, rng));
  auto w = tape.constant(random_tensor({8, 1, 11}, rng));
  auto b = tape.constant(Tensor({8}));
  EXPECT_EQ(tape.value(ops::conv1d(tape, x, w, b, Padding::same)).shape(), (Shape{120, 8}));
  EXPECT_EQ(tape.value(ops::conv1d(tape, x, w, b, Padding::valid)).shape(), (Shape{110, 8}));
}

TEST(Conv1d, ValidMatchesSlidingWindowOracle) {
  Rng rng(3);
  const Tensor x = random_tensor({5, 1}, rng);
  const Tensor w = random_tensor({1, 1, 3}, rng);
  const Tensor b = random_tensor({1}, rng);
  Tape tape(false);
  const Tensor& y = tape.value(
      ops::conv1d(tape, tape.constant(x), tape.constant(w), tape.constant(b), Padding::valid));
  ASSERT_EQ(y.shape(), (Shape{3, 1}));
  for (std::size_t t = 0; t < 3; ++t) {
    double expect = b[0];
    for (std::size_t k = 0; k < 3; ++k) expect += w[k] * x[t + k];
    EXPECT_NEAR(y[t], expect, 1e-14);
  }
}

TEST(Conv1d, SamePaddingMatchesZeroPaddedOracle) {
  Rng rng(4);
  const Tensor x = random_tensor({2, 9, 3}, rng);
  const Tensor w = random_tensor({4, 3, 5}, rng);
  const Tensor b = random_tensor({4}, rng);
  Tape tape(false);
  const Tensor& y =
      tape.value(ops::conv1d(tape, tape.constant(x), tape.constant(w), tape.constant(b), Padding::same));
  ASSERT_EQ(y.shape(), (Shape{2, 9, 4}));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 9; ++t)
      for (std::size_t f = 0; f < 4; ++f) {
        double expect = b[f];
        for (std::size_t k = 0; k < 5; ++k) {
          const long s = static_cast<long>(t + k) - 2;
          if (s < 0 || s >= 9) continue;
          for (std::size_t c = 0; c < 3; ++c) expect += w.at(f, c, k) * x.at(n, s, c);
        }
        EXPECT_NEAR(y.at(n, t, f), expect, 1e-13);
      }
}

TEST(Conv1d, LinearWithoutBias) {
  Rng rng(5);
  const Tensor x = random_tensor({3, 30, 2}, rng);
  const Tensor w = random_tensor({6, 2, 3}, rng);
  Tensor ax = x;
  for (auto& v : ax.values()) v *= -2.5;
  Tape tape(false);
  auto wv = tape.constant(w);
  auto bv = tape.constant(Tensor({6}));
  const Tensor& y1 = tape.value(ops::conv1d(tape, tape.constant(x), wv, bv, Padding::same));
  const Tensor& y2 = tape.value(ops::conv1d(tape, tape.constant(ax), wv, bv, Padding::same));
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_NEAR(y2[i], -2.5 * y1[i], 1e-12);
}

TEST(Conv1d, ShapeMismatchNamesBothShapes) {
  Tape tape(false);
  auto x = tape.constant(Tensor({10, 2}));
  auto w = tape.constant(Tensor({4, 3, 5}));
  auto b = tape.constant(Tensor({4}));
  try {
    ops::conv1d(tape, x, w, b, Padding::same);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[10x2]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[4x3x5]"), std::string::npos);
  }
  auto x_short = tape.constant(Tensor({3, 3}));
  EXPECT_THROW(ops::conv1d(tape, x_short, w, b, Padding::valid), DimensionError);
}

TEST(MaxPool1d, DirectMax) {
  Tape tape(false);
  auto x = tape.constant(Tensor({4, 1}, {1, 3, 2, 5}));
  const Tensor& y = tape.value(ops::maxpool1d(tape, x, 2, 2));
  ASSERT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(y[1], 5.0);
}

TEST(MaxPool1d, ConstantInput) {
  Tape tape(false);
  auto x = tape.constant(Tensor({7, 3}, 4.25));
  for (double v : tape.value(ops::maxpool1d(tape, x, 3, 2)).values()) EXPECT_EQ(v, 4.25);
}

TEST(MaxPool1d, MatchesExhaustiveOracle) {
  Rng rng(6);
  const Tensor x = random_tensor({16, 4}, rng);
  for (auto [window, stride] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 1}, {4, 3}}) {
    Tape tape(false);
    const Tensor& y = tape.value(ops::maxpool1d(tape, tape.constant(x), window, stride));
    const std::size_t out_len = (16 - window) / stride + 1;
    ASSERT_EQ(y.shape(), (Shape{out_len, 4}));
    for (std::size_t t = 0; t < out_len; ++t)
      for (std::size_t c = 0; c < 4; ++c) {
        double m = -1e300;
        for (std::size_t k = 0; k < window; ++k) m = std::max(m, x.at(t * stride + k, c));
        EXPECT_EQ(y.at(t, c), m);
      }
  }
}

TEST(MaxPool1d, WindowLongerThanInput) {
  Tape tape(false);
  EXPECT_THROW(ops::maxpool1d(tape, tape.constant(Tensor({3, 2})), 4, 1), DimensionError);
}

struct BnFixture {
  ParameterStore store;
  BatchNormLayer bn;
  explicit BnFixture(std::size_t ch) : bn(BatchNormLayer::create(store, "bn", ch)) {}
};

TEST(BatchNorm, IdentityOnStandardizedBatch) {
  // Columns with mean 0 and (biased) variance 1.
  Tensor x({4, 2}, {1, -1, -1, 1, 1, 1, -1, -1});
  BnFixture f(2);
  Tape tape(false);
  const Tensor& y = tape.value(f.bn.forward(tape, f.store, tape.constant(x), Mode::train));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-5);
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
  Rng rng(7);
  BnFixture f(3);
  f.store.at(f.bn.gamma).value = Tensor({3}, 0.0);
  f.store.at(f.bn.gamma).value.enable_grad();
  f.store.at(f.bn.beta).value = Tensor({3}, {0.5, -1.0, 2.0});
  f.store.at(f.bn.beta).value.enable_grad();
  for (auto mode : {Mode::train, Mode::infer}) {
    Tape tape(false);
    const Tensor& y = tape.value(f.bn.forward(tape, f.store, tape.constant(random_tensor({5, 3}, rng)), mode));
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(y.at(r, c), f.store.at(f.bn.beta).value[c]);
  }
}

TEST(BatchNorm, TrainModeStandardizesChannels) {
  Rng rng(8);
  BnFixture f(4);
  const Tensor x = random_tensor({6, 10, 4}, rng, -3.0, 7.0);
  Tape tape(false);
  const Tensor& y = tape.value(f.bn.forward(tape, f.store, tape.constant(x), Mode::train));
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < 60; ++r) mean += y[r * 4 + c];
    mean /= 60;
    for (std::size_t r = 0; r < 60; ++r) var += (y[r * 4 + c] - mean) * (y[r * 4 + c] - mean);
    var /= 60;
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatisticsFollowEma) {
  BnFixture f(1);
  Tensor x({2, 1}, {1.0, 3.0});  // mean 2, variance 1
  Tape tape(false);
  f.bn.forward(tape, f.store, tape.constant(x), Mode::train);
  EXPECT_NEAR(f.store.at(f.bn.running_mean).value[0], 0.9 * 0.0 + 0.1 * 2.0, 1e-15);
  EXPECT_NEAR(f.store.at(f.bn.running_var).value[0], 0.9 * 1.0 + 0.1 * 1.0, 1e-15);
  // Infer mode reads the running buffers and leaves them alone.
  const Tensor& y = tape.value(f.bn.forward(tape, f.store, tape.constant(Tensor({1, 1}, 0.2)), Mode::infer));
  EXPECT_NEAR(y[0], (0.2 - 0.2) / std::sqrt(1.0 + 1e-5), 1e-12);
  EXPECT_NEAR(f.store.at(f.bn.running_mean).value[0], 0.2, 1e-15);
}

TEST(Dense, IdentityWeights) {
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tape tape(false);
  auto x = tape.constant(Tensor::vector({0.5, -2.0, 3.0}));
  const Tensor& y =
      tape.value(ops::dense(tape, x, tape.constant(eye), tape.constant(Tensor({3})), Activation::identity));
  EXPECT_EQ(y.storage(), (std::vector<double>{0.5, -2.0, 3.0}));
}

TEST(Dense, ReluOnNegativePreactivations) {
  Rng rng(9);
  Tensor w = random_tensor({4, 5}, rng, 0.1, 1.0);
  Tape tape(false);
  auto x = tape.constant(random_tensor({5}, rng, -2.0, -0.1));
  const Tensor& y = tape.value(ops::dense(tape, x, tape.constant(w), tape.constant(Tensor({4})), Activation::relu));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Dense, MatchesTripleLoopOracle) {
  Rng rng(10);
  const Tensor x = random_tensor({7, 5}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  const Tensor b = random_tensor({3}, rng);
  for (auto act : {Activation::identity, Activation::tanh, Activation::sigmoid, Activation::relu}) {
    Tape tape(false);
    const Tensor& y = tape.value(ops::dense(tape, tape.constant(x), tape.constant(w), tape.constant(b), act));
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t o = 0; o < 3; ++o) {
        double a = b[o];
        for (std::size_t k = 0; k < 5; ++k) a += w.at(o, k) * x.at(i, k);
        double e = a;
        if (act == Activation::tanh) e = std::tanh(a);
        if (act == Activation::sigmoid) e = testing::sigmoid(a);
        if (act == Activation::relu) e = std::max(a, 0.0);
        EXPECT_NEAR(y.at(i, o), e, 1e-14);
      }
  }
}

TEST(Dense, DimensionMismatch) {
  Tape tape(false);
  EXPECT_THROW(ops::dense(tape, tape.constant(Tensor({4})), tape.constant(Tensor({3, 5})),
                          tape.constant(Tensor({3})), Activation::identity),
               DimensionError);
}

TEST(Dropout, RateZeroAndInferAreIdentity) {
  Rng rng(11);
  Tape tape(false);
  auto x = tape.constant(random_tensor({50}, rng));
  Rng drop(1);
  EXPECT_EQ(ops::dropout(tape, x, 0.0, Mode::train, drop).id, x.id);
  EXPECT_EQ(ops::dropout(tape, x, 0.0, Mode::infer, drop).id, x.id);
  EXPECT_EQ(ops::dropout(tape, x, 0.7, Mode::infer, drop).id, x.id);
}

TEST(Dropout, SurvivorFractionAndScaling) {
  Tape tape(false);
  auto x = tape.constant(Tensor({100000}, 1.0));
  Rng drop(12);
  const Tensor& y = tape.value(ops::dropout(tape, x, 0.5, Mode::train, drop));
  std::size_t survivors = 0;
  for (double v : y.values()) {
    if (v != 0.0) {
      ++survivors;
      EXPECT_EQ(v, 2.0);
    }
  }
  EXPECT_NEAR(static_cast<double>(survivors) / 1e5, 0.5, 0.01);
}

TEST(Dropout, DeterministicUnderSeedAndRejectsBadRate) {
  Tape tape(false);
  auto x = tape.constant(Tensor({1000}, 1.0));
  Rng a(99), b(99);
  const Tensor first = tape.value(ops::dropout(tape, x, 0.3, Mode::train, a));
  EXPECT_EQ(first, tape.value(ops::dropout(tape, x, 0.3, Mode::train, b)));
  EXPECT_THROW(ops::dropout(tape, x, 1.0, Mode::train, a), ParameterError);
  EXPECT_THROW(ops::dropout(tape, x, -0.1, Mode::infer, a), ParameterError);
}

TEST(Lstm, ZeroWeightsGiveZeroStates) {
  Rng rng(13);
  Tape tape(false);
  const std::size_t offsets[] = {0, 3, 7};
  auto x = tape.constant(random_tensor({7, 4}, rng));
  const Tensor& h = tape.value(
      ops::lstm(tape, x, offsets, tape.constant(Tensor({4, 5, 9})), tape.constant(Tensor({4, 5}))));
  ASSERT_EQ(h.shape(), (Shape{7, 5}));
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleStepMatchesGateOracle) {
  Rng rng(14);
  const std::size_t in = 3, hid = 4;
  const Tensor x = random_tensor({1, in}, rng);
  const Tensor w = random_tensor({4, hid, in + hid}, rng);
  const Tensor b = random_tensor({4, hid}, rng);
  Tape tape(false);
  const std::size_t offsets[] = {0, 1};
  const Tensor& h = tape.value(ops::lstm(tape, tape.constant(x), offsets, tape.constant(w), tape.constant(b)));
  for (std::size_t j = 0; j < hid; ++j) {
    double a[4];
    for (std::size_t g = 0; g < 4; ++g) {
      a[g] = b.at(g, j);
      for (std::size_t k = 0; k < in; ++k) a[g] += w.at(g, j, k) * x[k];  // h_prev = 0
    }
    const double i = testing::sigmoid(a[0]), g = std::tanh(a[2]), o = testing::sigmoid(a[3]);
    const double c = i * g;  // c_prev = 0 so the forget gate drops out
    EXPECT_NEAR(h[j], o * std::tanh(c), 1e-14);
  }
}

TEST(Lstm, OutputLengthAndEmptySequence) {
  Rng rng(15);
  Tape tape(false);
  auto w = tape.constant(random_tensor({4, 2, 5}, rng));
  auto b = tape.constant(Tensor({4, 2}));
  const std::size_t offsets[] = {0, 9};
  EXPECT_EQ(tape.value(ops::lstm(tape, tape.constant(random_tensor({9, 3}, rng)), offsets, w, b)).dim(0), 9u);
  const std::size_t with_empty[] = {0, 2, 2, 4};
  EXPECT_THROW(ops::lstm(tape, tape.constant(random_tensor({4, 3}, rng)), with_empty, w, b), SequenceLengthError);
}

TEST(Lstm, SequencesInABatchAreIndependent) {
  Rng rng(16);
  const Tensor x = random_tensor({5, 3}, rng);
  const Tensor w = random_tensor({4, 2, 5}, rng);
  const Tensor b = random_tensor({4, 2}, rng);
  Tape tape(false);
  auto wv = tape.constant(w), bv = tape.constant(b);
  const std::size_t split[] = {0, 2, 5};
  const Tensor& both = tape.value(ops::lstm(tape, tape.constant(x), split, wv, bv));
  Tensor tail({3, 3});
  std::copy_n(x.values().data() + 6, 9, tail.values().data());
  const std::size_t alone[] = {0, 3};
  const Tensor& solo = tape.value(ops::lstm(tape, tape.constant(tail), alone, wv, bv));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(both[4 + i], solo[i]);
}

TEST(BiLstmMaxPool, SingleStepIsConcatenatedState) {
  Rng rng(17);
  ParameterStore store;
  auto layer = BiLstmMaxPoolLayer::create(store, "bi", 3, 4, rng);
  Tape tape(false);
  auto x = tape.constant(random_tensor({1, 3}, rng));
  const std::size_t offsets[] = {0, 1};
  const Tensor& y = tape.value(layer.forward(tape, store, &x, offsets));
  ASSERT_EQ(y.shape(), (Shape{1, 8}));
  const Tensor& hf = tape.value(layer.forward_dir.forward(tape, store, x, offsets));
  const Tensor& hb = tape.value(layer.backward_dir.forward(tape, store, x, offsets));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(y[j], hf[j]);
    EXPECT_EQ(y[4 + j], hb[j]);
  }
}

TEST(BiLstmMaxPool, PalindromeWithTiedWeightsMirrorsDirections) {
  Rng rng(18);
  const std::size_t in = 3, hid = 5, len = 7;
  Tensor x({len, in});
  for (std::size_t t = 0; t <= len / 2; ++t)
    for (std::size_t c = 0; c < in; ++c) x.at(t, c) = x.at(len - 1 - t, c) = uniform(rng, -1, 1);
  const Tensor w = random_tensor({4, hid, in + hid}, rng);
  const Tensor b = random_tensor({4, hid}, rng);
  Tape tape(false);
  auto xv = tape.constant(x), wv = tape.constant(w), bv = tape.constant(b);
  const std::size_t offsets[] = {0, len};
  auto hf = ops::lstm(tape, xv, offsets, wv, bv);
  auto hb = ops::reverse_sequences(tape, ops::lstm(tape, ops::reverse_sequences(tape, xv, offsets), offsets, wv, bv),
                                   offsets);
  const Tensor& F = tape.value(hf);
  const Tensor& B = tape.value(hb);
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t j = 0; j < hid; ++j) EXPECT_NEAR(B.at(t, j), F.at(len - 1 - t, j), 1e-15);
}

TEST(BiLstmMaxPool, OutputWidthAndEmptyFallback) {
  Rng rng(19);
  ParameterStore store;
  auto layer = BiLstmMaxPoolLayer::create(store, "bi", 4, 6, rng);
  for (std::size_t i = 0; i < 12; ++i) store.at(layer.fallback).value[i] = 0.1 * static_cast<double>(i);
  Tape tape(false);
  auto x = tape.constant(random_tensor({5, 4}, rng));
  const std::size_t offsets[] = {0, 0, 3, 3, 5};
  const Tensor& y = tape.value(layer.forward(tape, store, &x, offsets));
  ASSERT_EQ(y.shape(), (Shape{4, 12}));
  for (std::size_t j = 0; j < 12; ++j) {
    EXPECT_EQ(y.at(0, j), 0.1 * static_cast<double>(j));
    EXPECT_EQ(y.at(2, j), 0.1 * static_cast<double>(j));
  }
  const std::size_t none[] = {0, 0, 0};
  const Tensor& z = tape.value(layer.forward(tape, store, nullptr, none));
  ASSERT_EQ(z.shape(), (Shape{2, 12}));
  EXPECT_EQ(z.at(1, 11), 1.1);
}

TEST(Softmax, RowsSumToOne) {
  Rng rng(20);
  Tape tape(false);
  const Tensor& p = tape.value(ops::softmax_rows(tape, tape.constant(random_tensor({6, 15}, rng, -30, 30))));
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 15; ++k) s += p.at(r, k);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace msnf

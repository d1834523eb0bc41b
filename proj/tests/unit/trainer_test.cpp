// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "msnf/data/generator.hpp"
#include "msnf/error.hpp"
#include "msnf/model/trainer.hpp"
#include "msnf/text/embedding.hpp"

namespace msnf {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.note_dim = 8;
  c.hidden_note = 4;
  c.head_width = 8;
  return c;
}

std::vector<EncodedStudent> small_cohort(std::size_t n, std::uint64_t seed) {
  data::CohortSpec spec;
  spec.n_students = n;
  spec.seed = seed;
  spec.dropout_rate = 0.4;
  spec.signal_strength = 3.0;
  text::HashingEmbedder e(8, 0);
  return data::encode_dataset(data::generate_cohort(spec), e);
}

Schedule short_schedule(std::size_t a, std::size_t b, double lr = 1e-2) {
  Schedule s;
  s.learning_rates = {lr, lr / 10.0};
  s.iterations = {a, b};
  s.scale = 1.0;
  s.batch_size = 8;
  return s;
}

TEST(Schedule, PhasesFollowTheScale) {
  Schedule s;  // 16000 + 5000 at scale 50
  EXPECT_EQ(s.phase_steps(), (std::vector<std::size_t>{320, 100}));
  EXPECT_EQ(s.total_iterations(), 420u);
  EXPECT_EQ(s.learning_rate(0), 1e-3);
  EXPECT_EQ(s.learning_rate(319), 1e-3);
  EXPECT_EQ(s.learning_rate(320), 1e-4);
  EXPECT_EQ(s.learning_rate(419), 1e-4);
  EXPECT_THROW(s.learning_rate(420), ContractError);
  s.scale = 1.0;
  EXPECT_EQ(s.total_iterations(), 21000u);
}

TEST(Schedule, ValidateRejectsNonsense) {
  Schedule s;
  s.iterations = {10};
  EXPECT_THROW(s.validate(), ParameterError);
  s = Schedule{};
  s.learning_rates[1] = -1.0;
  EXPECT_THROW(s.validate(), ParameterError);
  s = Schedule{};
  s.momentum = 1.0;
  EXPECT_THROW(s.validate(), ParameterError);
  s = Schedule{};
  s.batch_size = 0;
  EXPECT_THROW(s.validate(), ParameterError);
}

TEST(Train, TraceLengthAndLossDecrease) {
  const auto data = small_cohort(48, 1);
  MsnfModel m(small_config(), 1);
  m.fit_scaler(data);
  TrainOptions opt;
  opt.schedule = short_schedule(60, 20, 1e-2);
  opt.schedule.momentum = 0.9;
  opt.seed = 2;
  std::size_t calls = 0;
  const TrainResult r = train(m, data, opt, [&](std::size_t, double) { ++calls; });
  ASSERT_EQ(r.loss_trace.size(), 80u);
  EXPECT_EQ(calls, 80u);
  const auto head = std::accumulate(r.loss_trace.begin(), r.loss_trace.begin() + 10, 0.0);
  const auto tail = std::accumulate(r.loss_trace.end() - 10, r.loss_trace.end(), 0.0);
  EXPECT_LT(tail, 0.8 * head);
}

TEST(Train, SameSeedSameTrace) {
  const auto data = small_cohort(30, 3);
  auto run = [&](std::uint64_t seed) {
    MsnfModel m(small_config(), 4);
    m.fit_scaler(data);
    TrainOptions opt;
    opt.schedule = short_schedule(8, 4);
    opt.seed = seed;
    return train(m, data, opt).loss_trace;
  };
  const auto a = run(5);
  EXPECT_EQ(a, run(5));
  EXPECT_NE(a, run(6));
}

TEST(Train, DivergenceIsReported) {
  const auto data = small_cohort(24, 5);
  MsnfModel m(small_config(), 5);
  m.fit_scaler(data);
  TrainOptions opt;
  opt.schedule = short_schedule(50, 1, 1e30);
  try {
    train(m, data, opt);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("learning rate 1e+30"), std::string::npos) << e.what();
  }
}

TEST(Train, EmptyDataAndBadWeights) {
  MsnfModel m(small_config(), 6);
  TrainOptions opt;
  opt.schedule = short_schedule(1, 1);
  EXPECT_THROW(train(m, std::span<const EncodedStudent>{}, opt), EmptyBatchError);
  const auto data = small_cohort(10, 6);
  opt.sample_weights = {1.0, 2.0};
  EXPECT_THROW(train(m, data, opt), DimensionError);
}

TEST(Train, DoubledWeightsMatchDoubledLearningRate) {
  // plain SGD on mean(w * loss): w = 2 at rate lr takes the same steps as w = 1 at rate 2 lr
  const auto data = small_cohort(20, 7);
  auto run = [&](double weight, double lr) {
    MsnfModel m(small_config(), 8);
    m.fit_scaler(data);
    TrainOptions opt;
    opt.schedule = short_schedule(4, 1, lr);
    opt.seed = 9;
    opt.sample_weights.assign(data.size(), weight);
    train(m, data, opt);
    return m;
  };
  const MsnfModel a = run(2.0, 1e-2), b = run(1.0, 2e-2);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.params().entries().size(); ++i) {
    const auto& pa = a.params().entries()[i].value;
    const auto& pb = b.params().entries()[i].value;
    for (std::size_t j = 0; j < pa.size(); ++j) worst = std::max(worst, std::abs(pa[j] - pb[j]));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(DurationHead, StartsAtTheMaskedMean) {
  const auto data = small_cohort(60, 10);
  MsnfModel m(small_config(), 11);
  m.fit_scaler(data);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : data) {
    if (derive_mask(s.labels)[kDD]) {
      sum += *s.labels.duration;
      ++n;
    }
  }
  ASSERT_GT(n, 0u);
  const double mean = initialize_duration_head(m, data);
  EXPECT_NEAR(mean, sum / static_cast<double>(n), 1e-12);
  EXPECT_EQ(m.params().at("head4.out.bias").value[0], mean);

  std::vector<EncodedStudent> stayers;
  for (const auto& s : data) {
    if (!s.labels.dropout) stayers.push_back(s);
  }
  MsnfModel fresh(small_config(), 12);
  EXPECT_EQ(initialize_duration_head(fresh, stayers), 0.0);
  EXPECT_EQ(fresh.params().at("head4.out.bias").value[0], 0.0);
}

}  // namespace
}  // namespace msnf

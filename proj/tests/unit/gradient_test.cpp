// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "gradient_cases.hpp"

namespace msnf::testing {
namespace {

class LayerGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LayerGradients, MatchCentralDifferences) {
  const auto cases = layer_gradient_cases();
  const auto& c = cases.at(GetParam());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = c.run(seed);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LE(r.max_relative_error, kGradientTolerance) << c.name << " seed " << seed << ": " << r.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(AllLayers, LayerGradients, ::testing::Range<std::size_t>(0, layer_gradient_cases().size()),
                         [](const auto& info) { return layer_gradient_cases().at(info.param).name; });

class HeadGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(HeadGradients, MatchCentralDifferences) {
  const auto cases = head_gradient_cases();
  const auto& c = cases.at(GetParam());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = c.run(seed);
    EXPECT_LE(r.max_relative_error, kGradientTolerance) << c.name << " seed " << seed << ": " << r.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(AllHeads, HeadGradients, ::testing::Range<std::size_t>(0, head_gradient_cases().size()),
                         [](const auto& info) { return head_gradient_cases().at(info.param).name; });

TEST(EndToEndGradient, SampledCoordinatesMatch) {
  const auto r = end_to_end_gradient_check(5);
  EXPECT_GT(r.checked, 100u);
  EXPECT_LE(r.max_relative_error, kGradientTolerance) << r.worst;
}

}  // namespace
}  // namespace msnf::testing

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msnf/data/record.hpp"

namespace msnf::data {

struct SmoteOptions {
  std::size_t k = 5;
  /// Minority count after rebalancing = round(target_ratio * majority count).
  double target_ratio = 1.0;
  std::uint64_t seed = 0;
};

/// Per-variable semester mean followed by the last semester: the point a
/// record occupies for neighbor search.
std::vector<double> numeric_summary(const StudentRecord& r);

/// Oversamples the smaller FD class. Each synthetic record interpolates the
/// performance of a minority base toward one of its k nearest minority
/// neighbors (z-scored summary distance) with one lambda ~ U[0, 1]; semester t
/// of the base pairs with semester min(t, T_neighbor - 1) of the neighbor.
/// Each static categorical except gender takes the neighbor's value with
/// probability lambda. Labels, notes and gender come from the base.
/// Originals come first, unchanged.
Dataset smote_rebalance(const Dataset& data, const SmoteOptions& options);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k folds stratified on the dropout label. Only original records are ever
/// tested; a synthetic record trains in every fold whose test split does not
/// hold its base.
std::vector<Fold> split_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

/// Stratified single split; `train_fraction` of each class trains.
Fold holdout_split(const Dataset& data, double train_fraction, std::uint64_t seed);

}  // namespace msnf::data

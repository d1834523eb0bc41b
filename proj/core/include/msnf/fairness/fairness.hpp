// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msnf/engine/tape.hpp"

namespace msnf::fairness {

enum Group : std::size_t { kUnprivileged = 0, kPrivileged = 1 };

/// Confusion counts per group. Labels and predictions are coded 1 = favorable.
struct GroupOutcomes {
  // counts[group][label][prediction]
  std::array<std::array<std::array<std::size_t, 2>, 2>, 2> counts{};

  void add(bool privileged, bool favorable_label, bool favorable_prediction, std::size_t n = 1);
  std::size_t group_size(Group g) const;
  GroupOutcomes swapped() const;

  /// Maps raw labels/predictions (any coding) to favorable = (value == favorable).
  static GroupOutcomes tally(std::span<const bool> privileged, std::span<const int> labels,
                             std::span<const int> predictions, int favorable);
};

inline constexpr double kParityTarget = 0.1;   // SPD, EOD, AOD in [-0.1, 0.1]
inline constexpr double kImpactLow = 0.8;      // DI in [0.8, 1.2]
inline constexpr double kImpactHigh = 1.2;

/// Undefined quantities (a rate with an empty denominator) stay empty.
struct FairnessReport {
  std::optional<double> spd, eod, aod, di;
  std::optional<bool> spd_fair, eod_fair, aod_fair, di_fair;

  std::size_t fair_count() const;
  bool all_fair() const;
};

/// SPD = P(fav|u) - P(fav|p); EOD = TPR_u - TPR_p;
/// AOD = ((FPR_u - FPR_p) + (TPR_u - TPR_p)) / 2; DI = P(fav|u) / P(fav|p).
/// Throws ParameterError if a group is empty.
FairnessReport compute_metrics(const GroupOutcomes& outcomes);

/// w(s, y) = P(s) P(y) / P(s, y), one weight per sample. Labels are compared
/// against `favorable` only to form the two label classes.
std::vector<double> reweigh(std::span<const bool> privileged, std::span<const int> labels, int favorable);

/// eta * (mean p[:, 1] over unprivileged rows - mean over privileged rows)^2
/// for p of shape [B, 2]. Contributes 0 unless both groups are present.
Var prejudice_regularizer(Tape& tape, Var p1, std::span<const bool> privileged, double eta);

}  // namespace msnf::fairness

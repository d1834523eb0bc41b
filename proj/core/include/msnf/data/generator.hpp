// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

#include "msnf/data/record.hpp"

namespace msnf::data {

struct CohortSpec {
  std::size_t n_students = 2000;
  double dropout_rate = 0.14;
  double temporary_share = 0.74;
  double male_share = 0.76;
  /// Planted effects are fixed; per-value noise has std 1 / signal_strength.
  /// At 0 nothing is planted and noise has unit std.
  double signal_strength = 1.0;
  /// Probability that a female non-dropout is relabeled as a dropout after
  /// her features were drawn; 0 keeps labels independent of gender.
  double gender_label_bias = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Columns that carry each planted effect (risk direction is per column).
struct PlantedColumns {
  static constexpr std::size_t attendance = 4;          // all dropouts, lower
  static constexpr std::size_t exams_unattended = 9;    // all dropouts, higher
  static constexpr std::size_t blocked = 14;            // permanent dropouts
  static constexpr std::size_t scholarship = 16;        // permanent dropouts, lower
  static constexpr std::size_t credits_retaken = 1;     // next-semester dropouts
  static constexpr std::size_t blocks_total = 15;       // next-semester dropouts
  static constexpr std::size_t study_duration = 13;     // equals the semester index
};

/// The pair of columns that cause c shifts.
std::pair<std::size_t, std::size_t> cause_columns(std::size_t cause);

Dataset generate_cohort(const CohortSpec& spec);

struct CohortSummary {
  struct Row {
    std::size_t count = 0, dropout = 0, temporary = 0, permanent = 0;
  };
  Row female, male, total;
  std::string table() const;  // Gender | Count | Dropout | Temporary | Permanent
};

CohortSummary summarize_cohort(const Dataset& data);

}  // namespace msnf::data

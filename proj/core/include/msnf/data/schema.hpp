// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "msnf/model/config.hpp"
#include "msnf/model/inputs.hpp"

namespace msnf::data {

inline constexpr const char* kRecordSchema = "msnf.student/1";

struct CategoricalFeature {
  std::string_view name;
  std::size_t cardinality;
};

// Admission-time demographics; the one-hot blocks are laid out in this order.
inline constexpr std::array<CategoricalFeature, 17> kStaticFeatures{{
    {"age", 8},
    {"birth_year", 6},
    {"gender", 2},
    {"religion", 5},
    {"starting_major", 16},
    {"transferred_credits", 6},
    {"blood_group", 8},
    {"birth_place", 8},
    {"permanent_address", 10},
    {"local_address", 10},
    {"secondary_school_grade", 8},
    {"higher_school_grade", 8},
    {"marital_status", 3},
    {"source_of_finance", 6},
    {"part_full_time", 2},
    {"local_guardian", 4},
    {"parents_income", 10},
}};

constexpr std::size_t static_slot_count() {
  std::size_t n = 0;
  for (const auto& f : kStaticFeatures) n += f.cardinality;
  return n;
}
static_assert(static_slot_count() == kStaticWidth);

std::size_t static_offset(std::string_view feature);

/// Raw categorical map (feature -> category index) to the 120-slot one-hot.
/// Throws SchemaError on a missing/unknown feature or out-of-range index.
StaticInput encode_static(const std::map<std::string, std::size_t>& raw);

// Per-semester performance variables, in column order.
inline constexpr std::array<std::string_view, kPerformanceWidth> kPerformanceVariables{{
    "new_credits_taken",
    "credits_retaken",
    "passing_credits",
    "failed_credits",
    "overall_attendance",
    "avg_semester_starting_gpa",
    "avg_semester_gpa",
    "avg_semester_ending_gpa",
    "exams_unattended_since_admission",
    "exams_unattended_this_semester",
    "counselling_scheduled",
    "payment_due_this_semester",
    "payment_dues_since_admission",
    "study_duration",
    "blocked_next_semester",
    "blocks_since_admission",
    "scholarship_amount",
    "accommodation_status",
    "total_scholarship",
    "avg_scholarship_per_semester",
}};

enum class CauseScope { both, permanent_only, temporary_only };

struct CauseInfo {
  std::string_view name;
  CauseScope scope;
};

inline constexpr std::array<CauseInfo, kCauseCount> kCauses{{
    {"financial", CauseScope::both},
    {"family", CauseScope::both},
    {"marriage", CauseScope::both},
    {"physically_ill", CauseScope::both},
    {"death_of_family_member", CauseScope::both},
    {"personal", CauseScope::both},
    {"death", CauseScope::permanent_only},
    {"accident", CauseScope::both},
    {"struggling_with_grades", CauseScope::both},
    {"covid19_family_death", CauseScope::both},
    {"covid19_financial", CauseScope::temporary_only},
    {"covid19_online_class_hardship", CauseScope::temporary_only},
    {"internship", CauseScope::temporary_only},
    {"traveling", CauseScope::temporary_only},
    {"mentally_ill", CauseScope::temporary_only},
}};

bool cause_allowed(std::size_t cause, bool temporary);

/// Throws SchemaError listing the valid names.
std::size_t cause_index(std::string_view name);
std::string_view cause_name(std::size_t index);
std::string valid_cause_list();

inline constexpr std::array<std::string_view, 7> kVisitReasons{{
    "regular_advising",
    "course_registration",
    "poor_grades",
    "attendance",
    "payment",
    "personal",
    "career",
}};

inline constexpr const char* kNoResult = "no-result";

}  // namespace msnf::data

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "msnf/data/generator.hpp"
#include "msnf/model/config.hpp"
#include "msnf/model/trainer.hpp"

namespace msnf::harness {

enum class SplitMode { holdout, kfold };
enum class Mitigation { none, reweigh, regularizer };

const char* to_string(SplitMode m);
const char* to_string(Mitigation m);
Mitigation mitigation_from_string(std::string_view s);

struct SplitConfig {
  SplitMode mode = SplitMode::holdout;
  std::size_t k = 10;
  double train_fraction = 0.75;
};

struct SmoteConfig {
  bool enabled = true;
  std::size_t k = 5;
  double target_ratio = 1.0;
};

struct FairnessConfig {
  std::string protected_attribute = "gender";  // the only attribute records carry
  Mitigation mitigation = Mitigation::none;
  double eta = 5.0;
};

/// Everything a run depends on. `seed` also seeds the cohort; cohort.seed is
/// ignored by the commands.
struct RunConfig {
  std::uint64_t seed = 0;
  data::CohortSpec cohort;
  ModelConfig model;
  Schedule schedule;
  SplitConfig split;
  SmoteConfig smote;
  FairnessConfig fairness;
  bool mask_rule3 = false;
  /// Start the DD output bias at the training mean duration.
  bool init_duration_head = true;
  /// "hashing" or "precomputed:<path>" (a note-id -> vector table).
  std::string embedder = "hashing";

  /// Throws ParameterError on bad values and FormatError when a referenced
  /// file is missing.
  void validate() const;
};

/// JSON text; // and /* */ comments are allowed, unknown keys are rejected.
/// Missing keys keep their defaults.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical single-line JSON of every field.
std::string to_json(const RunConfig& config);

/// Applies `dotted.key=value`, e.g. `schedule.scale=10` or
/// `schedule.learning_rates=[0.01,0.001]`. The value is read as JSON when it
/// parses, else as a string. Unknown keys throw ParameterError.
void apply_override(RunConfig& config, std::string_view assignment);

}  // namespace msnf::harness

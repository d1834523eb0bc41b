// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msnf/model/inputs.hpp"
#include "msnf/text/embedding.hpp"

namespace msnf::data {

enum class Gender { male, female };
const char* to_string(Gender g);
Gender gender_from_string(const std::string& s);

/// Where a SMOTE record came from: base + lambda * (neighbor - base).
struct SmoteOrigin {
  std::string base;
  std::string neighbor;
  double lambda = 0.0;
  friend bool operator==(const SmoteOrigin&, const SmoteOrigin&) = default;
};

struct StudentRecord {
  std::string id;
  std::map<std::string, std::size_t> raw_static;
  StaticInput static_input;
  Gender gender = Gender::male;
  PerformanceSequence performance;
  std::vector<text::NoteDocument> notes;
  TaskLabels labels;
  bool synthetic = false;
  std::optional<SmoteOrigin> origin;

  /// Throws SchemaError/ContractError on any broken invariant.
  void validate() const;
  friend bool operator==(const StudentRecord&, const StudentRecord&) = default;
};

using Dataset = std::vector<StudentRecord>;

/// Semesters a dropout may lie beyond the last recorded one.
inline constexpr std::size_t kDropoutHorizon = 3;

// One JSON object per line, each with "schema": "msnf.student/1".
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);

// Flat tables: one row per student (static) or per student-semester (performance).
void write_static_csv(const std::filesystem::path& path, const Dataset& data);
void write_performance_csv(const std::filesystem::path& path, const Dataset& data);

/// Embeds every note and produces model inputs. Privileged = male.
std::vector<EncodedStudent> encode_dataset(const Dataset& data, const text::Embedder& embedder);

}  // namespace msnf::data

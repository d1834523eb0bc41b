// SPDX-License-Identifier: Apache-2.0
#include "msnf/data/generator.hpp"

#include <array>
#include <cstdio>
#include <sstream>

#include "msnf/data/schema.hpp"
#include "msnf/engine/rng.hpp"
#include "msnf/error.hpp"

namespace msnf::data {

namespace {

struct Column {
  double base, unit, risk;  // risk: direction a planted effect pushes the raw value
};

constexpr std::array<Column, kPerformanceWidth> kColumns{{
    {12.0, 2.0, -1.0},     // new credits
    {1.0, 0.8, 1.0},       // retaken
    {11.0, 2.0, -1.0},     // passing
    {1.0, 0.8, 1.0},       // failed
    {0.85, 0.07, -1.0},    // attendance
    {3.0, 0.3, -1.0},      // gpa start
    {3.0, 0.3, -1.0},      // gpa
    {3.0, 0.3, -1.0},      // gpa end
    {2.0, 1.0, 1.0},       // exams unattended, total
    {0.5, 0.5, 1.0},       // exams unattended, semester
    {1.0, 0.5, 1.0},       // counselling
    {500.0, 200.0, 1.0},   // payment due
    {1.0, 0.7, 1.0},       // payment dues, total
    {0.0, 0.0, 0.0},       // study duration (exact)
    {0.1, 0.3, 1.0},       // blocked
    {0.3, 0.5, 1.0},       // blocks, total
    {1000.0, 300.0, -1.0}, // scholarship
    {0.5, 0.4, 1.0},       // accommodation
    {4000.0, 1500.0, -1.0},
    {900.0, 250.0, -1.0},
}};

constexpr std::array<std::pair<std::size_t, std::size_t>, kCauseCount> kCauseColumns{{
    {11, 12}, {10, 17}, {17, 0}, {8, 3}, {10, 8}, {10, 0}, {3, 2}, {8, 2},
    {6, 7},   {10, 19}, {11, 19}, {5, 0}, {0, 18}, {17, 12}, {3, 5},
}};

const std::array<std::array<const char*, 2>, kCauseCount> kThemes{{
    {"worried about paying tuition this term", "fees are unpaid and asked about a payment plan"},
    {"family problems at home are taking time", "needs to support younger siblings at home"},
    {"getting married soon and planning the wedding", "new spouse and household responsibilities"},
    {"has been sick with a long illness", "doctor advised rest after surgery"},
    {"grieving after father passed away", "a close relative died recently"},
    {"personal issues are hurting motivation", "wants time off for private reasons"},
    {"guardian reported a critical health condition", "hospitalized in intensive care"},
    {"injured in a road accident", "recovering from a fracture after a crash"},
    {"failing several courses with a low gpa", "probation warning because of poor grades"},
    {"lost a relative to covid", "pandemic bereavement in the household"},
    {"parent lost a job during the covid lockdown", "pandemic cut household earnings"},
    {"no internet connection for online classes", "cannot follow zoom lectures from the village"},
    {"offered a full time internship at a company", "industry placement clashes with classes"},
    {"planning to travel abroad for months", "visa paperwork for a long trip overseas"},
    {"struggling with anxiety and depression", "referred to the campus mental health service"},
}};

constexpr std::array<std::size_t, kCauseCount> kThemeReason{4, 5, 5, 5, 5, 5, 5, 5, 2, 5, 4, 3, 6, 5, 5};

const std::array<const char*, 6> kGeneric{
    "discussed course plan for next semester", "reviewed credit load and registration",
    "asked about elective options",            "advised to meet course instructors",
    "talked about study schedule and goals",   "checked remaining degree requirements",
};

const std::array<const char*, 4> kRisk{
    "missed many classes recently",
    "attendance is low this term",
    "thinking about leaving the university",
    "seems disengaged from coursework",
};

constexpr double kExtraVisit = 0.25;
constexpr double kRegularVisit = 0.6;
constexpr double kDistractor = 0.08;
constexpr double kCauseGain = 2.0;

std::size_t draw_cause(Rng& rng, bool temporary) {
  std::array<std::size_t, kCauseCount> allowed{};
  std::size_t n = 0;
  for (std::size_t c = 0; c < kCauseCount; ++c) {
    if (cause_allowed(c, temporary)) allowed[n++] = c;
  }
  return allowed[uniform_index(rng, n)];
}

void draw_dropout_labels(Rng& rng, const CohortSpec& spec, std::size_t semesters, TaskLabels& y) {
  y.dropout = true;
  y.temporary = bernoulli(rng, spec.temporary_share);
  const std::size_t gap = 1 + uniform_index(rng, kDropoutHorizon);
  y.next_semester = gap == 1;
  y.duration = static_cast<double>(semesters + gap - 1);
  y.cause = draw_cause(rng, *y.temporary);
}

StudentRecord make_student(const CohortSpec& spec, std::size_t index) {
  Rng rng(derive_seed(spec.seed, index));
  const double s = spec.signal_strength;
  const double amp = s > 0.0 ? 1.0 : 0.0;
  const double sigma = s > 0.0 ? 1.0 / s : 1.0;
  const double q = s / (1.0 + s);  // chance a planted note cue shows up

  StudentRecord r;
  char id[32];
  std::snprintf(id, sizeof(id), "s%06zu", index);
  r.id = id;
  r.gender = bernoulli(rng, spec.male_share) ? Gender::male : Gender::female;
  const std::size_t semesters = 1 + uniform_index(rng, 12);
  if (bernoulli(rng, spec.dropout_rate)) draw_dropout_labels(rng, spec, semesters, r.labels);
  const TaskLabels& y = r.labels;

  for (const auto& f : kStaticFeatures) r.raw_static[std::string(f.name)] = uniform_index(rng, f.cardinality);
  r.raw_static["gender"] = r.gender == Gender::male ? 0 : 1;
  if (bernoulli(rng, y.dropout ? 0.3 + 0.4 * q : 0.3)) r.raw_static["part_full_time"] = 1;
  if (y.dropout && (*y.cause == 0 || *y.cause == 10) && bernoulli(rng, 0.6 * q)) r.raw_static["source_of_finance"] = 3;
  if (y.dropout && *y.cause == 2 && bernoulli(rng, q)) r.raw_static["marital_status"] = 1;

  for (std::size_t t = 1; t <= semesters; ++t) {
    const double ramp = amp * (0.5 + 0.5 * static_cast<double>(t) / static_cast<double>(semesters));
    std::array<double, kPerformanceWidth> effect{};
    if (y.dropout) {
      effect[PlantedColumns::attendance] += ramp;
      effect[PlantedColumns::exams_unattended] += ramp;
      if (!*y.temporary) {
        effect[PlantedColumns::blocked] += ramp;
        effect[PlantedColumns::scholarship] += ramp;
      }
      if (*y.next_semester) {
        effect[PlantedColumns::credits_retaken] += ramp;
        effect[PlantedColumns::blocks_total] += ramp;
      }
      const auto [a, b] = kCauseColumns[*y.cause];
      effect[a] += kCauseGain * ramp;
      effect[b] += kCauseGain * ramp;
    }
    std::vector<double> row(kPerformanceWidth);
    for (std::size_t c = 0; c < kPerformanceWidth; ++c) {
      const Column& col = kColumns[c];
      row[c] = col.base + col.unit * (col.risk * effect[c] + sigma * normal(rng));
    }
    row[PlantedColumns::study_duration] = static_cast<double>(t);
    r.performance.semesters.push_back(std::move(row));

    const int visits = (bernoulli(rng, kRegularVisit) ? 1 : 0) + (bernoulli(rng, kExtraVisit) ? 1 : 0);
    for (int v = 0; v < visits; ++v) {
      text::NoteDocument n;
      n.id = r.id + "-n" + std::to_string(r.notes.size() + 1);
      n.semester = t;
      std::string body = kGeneric[uniform_index(rng, kGeneric.size())];
      n.reason = std::string(kVisitReasons[uniform_index(rng, kVisitReasons.size())]);
      const double local = 0.5 + 0.5 * static_cast<double>(t) / static_cast<double>(semesters);
      if (y.dropout && bernoulli(rng, q * local)) {
        body += ". " + std::string(kThemes[*y.cause][uniform_index(rng, 2)]);
        if (bernoulli(rng, 0.5)) n.reason = std::string(kVisitReasons[kThemeReason[*y.cause]]);
      }
      if (y.dropout && bernoulli(rng, 0.5 * q)) body += ". " + std::string(kRisk[uniform_index(rng, kRisk.size())]);
      if (bernoulli(rng, kDistractor)) body += ". " + std::string(kThemes[uniform_index(rng, kCauseCount)][uniform_index(rng, 2)]);
      if (bernoulli(rng, kDistractor)) body += ". " + std::string(kRisk[uniform_index(rng, kRisk.size())]);
      n.text = body + ".";
      if (y.dropout && t == semesters && bernoulli(rng, 0.2)) n.result = *y.cause;
      r.notes.push_back(std::move(n));
    }
  }

  if (!y.dropout && r.gender == Gender::female && spec.gender_label_bias > 0.0 &&
      bernoulli(rng, spec.gender_label_bias)) {
    draw_dropout_labels(rng, spec, semesters, r.labels);
  }
  r.static_input = encode_static(r.raw_static);
  return r;
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string(what) + " must lie in [0, 1]");
}

std::string percent(std::size_t part, std::size_t whole) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%zu (%.0f%%)", part, whole ? 100.0 * part / whole : 0.0);
  return buf;
}

}  // namespace

void CohortSpec::validate() const {
  check_probability(dropout_rate, "dropout_rate");
  check_probability(temporary_share, "temporary_share");
  check_probability(male_share, "male_share");
  check_probability(gender_label_bias, "gender_label_bias");
  if (!(signal_strength >= 0.0)) throw ParameterError("signal_strength must be nonnegative");
}

std::pair<std::size_t, std::size_t> cause_columns(std::size_t cause) { return kCauseColumns.at(cause); }

Dataset generate_cohort(const CohortSpec& spec) {
  spec.validate();
  Dataset data;
  data.reserve(spec.n_students);
  for (std::size_t i = 0; i < spec.n_students; ++i) data.push_back(make_student(spec, i));
  return data;
}

CohortSummary summarize_cohort(const Dataset& data) {
  CohortSummary s;
  for (const auto& r : data) {
    for (auto* row : {&s.total, r.gender == Gender::male ? &s.male : &s.female}) {
      ++row->count;
      if (r.labels.dropout) {
        ++row->dropout;
        ++(*r.labels.temporary ? row->temporary : row->permanent);
      }
    }
  }
  return s;
}

std::string CohortSummary::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-7s %-16s %-16s %-16s %-16s\n", "Gender", "Count", "Dropout", "Temporary",
                "Permanent");
  os << line;
  auto put = [&](const char* name, const Row& r, bool share) {
    std::snprintf(line, sizeof(line), "%-7s %-16s %-16s %-16s %-16s\n", name,
                  share ? percent(r.count, total.count).c_str() : std::to_string(r.count).c_str(),
                  percent(r.dropout, r.count).c_str(), percent(r.temporary, r.dropout).c_str(),
                  percent(r.permanent, r.dropout).c_str());
    os << line;
  };
  put("Female", female, true);
  put("Male", male, true);
  put("Total", total, false);
  return os.str();
}

}  // namespace msnf::data

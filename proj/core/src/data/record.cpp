// SPDX-License-Identifier: Apache-2.0
#include "msnf/data/record.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "msnf/data/schema.hpp"
#include "msnf/error.hpp"

namespace msnf::data {

using nlohmann::json;

const char* to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

Gender gender_from_string(const std::string& s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  throw SchemaError("gender must be 'male' or 'female', got '" + s + "'");
}

void StudentRecord::validate() const {
  if (id.empty()) throw SchemaError("record id is empty");
  const std::string where = "record '" + id + "': ";
  try {
    if (encode_static(raw_static) != static_input) throw SchemaError("static one-hot does not match raw categories");
    const std::size_t g = raw_static.at("gender");
    if ((g == 0) != (gender == Gender::male)) throw SchemaError("gender field disagrees with static category");
    performance.validate();
    labels.validate();
  } catch (const SchemaError& e) {
    throw SchemaError(where + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(where + e.what());
  } catch (const Error& e) {
    throw ContractError(where + e.what());
  }
  const std::size_t t = performance.semesters.size();
  std::size_t prev = 1;
  for (const auto& n : notes) {
    if (n.id.empty()) throw SchemaError(where + "note without id");
    if (n.semester < 1 || n.semester > t) {
      throw SchemaError(where + "note '" + n.id + "' has semester " + std::to_string(n.semester) + " outside 1.." +
                        std::to_string(t));
    }
    if (n.semester < prev) throw SchemaError(where + "notes are not in semester order");
    prev = n.semester;
    if (n.result && *n.result >= kCauseCount) {
      throw SchemaError(where + "note result " + std::to_string(*n.result) + " is not a cause; valid causes: " +
                        valid_cause_list());
    }
  }
  if (labels.duration && *labels.duration > static_cast<double>(t + kDropoutHorizon)) {
    throw ContractError(where + "duration exceeds recorded semesters plus horizon");
  }
  if (labels.dropout && !cause_allowed(*labels.cause, *labels.temporary)) {
    throw SchemaError(where + "cause '" + std::string(cause_name(*labels.cause)) + "' cannot end a " +
                      (*labels.temporary ? "temporary" : "permanent") + " dropout");
  }
  if (synthetic != origin.has_value()) throw ContractError(where + "synthetic flag and origin disagree");
}

namespace {

json to_json(const StudentRecord& r) {
  json j;
  j["schema"] = kRecordSchema;
  j["id"] = r.id;
  j["gender"] = to_string(r.gender);
  json st = json::object();
  for (const auto& [k, v] : r.raw_static) st[k] = v;
  j["static"] = st;
  j["performance"] = r.performance.semesters;
  json notes = json::array();
  for (const auto& n : r.notes) {
    notes.push_back({{"id", n.id},
                     {"semester", n.semester},
                     {"reason", n.reason},
                     {"result", n.result ? std::string(cause_name(*n.result)) : std::string(kNoResult)},
                     {"text", n.text}});
  }
  j["notes"] = notes;
  json l = {{"dropout", r.labels.dropout}};
  if (r.labels.temporary) l["type"] = *r.labels.temporary ? "temporary" : "permanent";
  if (r.labels.next_semester) l["next_semester"] = *r.labels.next_semester;
  if (r.labels.duration) l["duration"] = *r.labels.duration;
  if (r.labels.cause) l["cause"] = std::string(cause_name(*r.labels.cause));
  j["labels"] = l;
  j["synthetic"] = r.synthetic;
  if (r.origin) j["origin"] = {{"base", r.origin->base}, {"neighbor", r.origin->neighbor}, {"lambda", r.origin->lambda}};
  return j;
}

std::size_t parse_cause(const json& v) {
  if (v.is_string()) return cause_index(v.get<std::string>());
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i < 0 || i >= static_cast<long long>(kCauseCount)) {
      throw SchemaError("cause index " + std::to_string(i) + " out of range; valid causes: " + valid_cause_list());
    }
    return static_cast<std::size_t>(i);
  }
  throw SchemaError("cause must be a name or an index; valid causes: " + valid_cause_list());
}

StudentRecord from_json(const json& j) {
  const auto schema = j.at("schema").get<std::string>();
  if (schema != kRecordSchema) {
    throw SchemaError("unsupported record schema '" + schema + "' (expected " + kRecordSchema + ")");
  }
  StudentRecord r;
  r.id = j.at("id").get<std::string>();
  r.gender = gender_from_string(j.at("gender").get<std::string>());
  for (const auto& [k, v] : j.at("static").items()) r.raw_static[k] = v.get<std::size_t>();
  r.static_input = encode_static(r.raw_static);
  r.performance.semesters = j.at("performance").get<std::vector<std::vector<double>>>();
  for (const auto& n : j.at("notes")) {
    text::NoteDocument d;
    d.id = n.at("id").get<std::string>();
    d.semester = n.at("semester").get<std::size_t>();
    d.reason = n.at("reason").get<std::string>();
    const auto& res = n.at("result");
    if (!(res.is_string() && res.get<std::string>() == kNoResult)) d.result = parse_cause(res);
    d.text = n.at("text").get<std::string>();
    r.notes.push_back(std::move(d));
  }
  const auto& l = j.at("labels");
  r.labels.dropout = l.at("dropout").get<bool>();
  if (l.contains("type")) {
    const auto t = l.at("type").get<std::string>();
    if (t != "temporary" && t != "permanent") throw SchemaError("dropout type must be temporary or permanent");
    r.labels.temporary = t == "temporary";
  }
  if (l.contains("next_semester")) r.labels.next_semester = l.at("next_semester").get<bool>();
  if (l.contains("duration")) r.labels.duration = l.at("duration").get<double>();
  if (l.contains("cause")) r.labels.cause = parse_cause(l.at("cause"));
  r.synthetic = j.value("synthetic", false);
  if (j.contains("origin")) {
    const auto& o = j.at("origin");
    r.origin = SmoteOrigin{o.at("base").get<std::string>(), o.at("neighbor").get<std::string>(),
                           o.at("lambda").get<double>()};
  }
  r.validate();
  return r;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  for (const auto& r : data) out << to_json(r).dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write dataset " + path.string());
  write_dataset(out, data);
  if (!out) throw FormatError("failed writing dataset " + path.string());
}

Dataset read_dataset(std::istream& in, const std::string& source) {
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    try {
      data.push_back(from_json(json::parse(line)));
    } catch (const SchemaError& e) {
      throw SchemaError(where + e.what());
    } catch (const DimensionError& e) {
      throw DimensionError(where + e.what());
    } catch (const Error& e) {
      throw FormatError(where + e.what());
    } catch (const json::exception& e) {
      throw FormatError(where + "malformed record: " + e.what());
    }
  }
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  return read_dataset(in, path.string());
}

void write_static_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "id";
  for (const auto& f : kStaticFeatures) out << ',' << f.name;
  out << '\n';
  for (const auto& r : data) {
    out << r.id;
    for (const auto& f : kStaticFeatures) out << ',' << r.raw_static.at(std::string(f.name));
    out << '\n';
  }
}

void write_performance_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "id,semester";
  for (const auto& v : kPerformanceVariables) out << ',' << v;
  out << '\n';
  out << std::setprecision(17);
  for (const auto& r : data) {
    for (std::size_t t = 0; t < r.performance.semesters.size(); ++t) {
      out << r.id << ',' << (t + 1);
      for (double v : r.performance.semesters[t]) out << ',' << v;
      out << '\n';
    }
  }
}

std::vector<EncodedStudent> encode_dataset(const Dataset& data, const text::Embedder& embedder) {
  std::vector<EncodedStudent> out;
  out.reserve(data.size());
  for (const auto& r : data) {
    EncodedStudent s;
    s.id = r.id;
    s.static_input = r.static_input;
    s.performance = r.performance;
    for (const auto& n : r.notes) s.notes.notes.push_back(embedder.embed(n));
    s.labels = r.labels;
    s.privileged = r.gender == Gender::male;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace msnf::data

// SPDX-License-Identifier: Apache-2.0
#include "msnf/data/schema.hpp"

#include "msnf/error.hpp"

namespace msnf::data {

std::size_t static_offset(std::string_view feature) {
  std::size_t off = 0;
  for (const auto& f : kStaticFeatures) {
    if (f.name == feature) return off;
    off += f.cardinality;
  }
  throw SchemaError("unknown static feature '" + std::string(feature) + "'");
}

StaticInput encode_static(const std::map<std::string, std::size_t>& raw) {
  StaticInput s;
  s.onehot.assign(kStaticWidth, 0.0);
  std::size_t off = 0;
  for (const auto& f : kStaticFeatures) {
    auto it = raw.find(std::string(f.name));
    if (it == raw.end()) throw SchemaError("static feature '" + std::string(f.name) + "' is missing");
    if (it->second >= f.cardinality) {
      throw SchemaError("static feature '" + std::string(f.name) + "' has category " + std::to_string(it->second) +
                        ", valid range is 0.." + std::to_string(f.cardinality - 1));
    }
    s.onehot[off + it->second] = 1.0;
    off += f.cardinality;
  }
  if (raw.size() != kStaticFeatures.size()) {
    for (const auto& [name, _] : raw) static_offset(name);  // throws on the unknown one
  }
  return s;
}

bool cause_allowed(std::size_t cause, bool temporary) {
  const auto scope = kCauses.at(cause).scope;
  return scope == CauseScope::both || (temporary ? scope == CauseScope::temporary_only
                                                 : scope == CauseScope::permanent_only);
}

std::string valid_cause_list() {
  std::string s;
  for (std::size_t i = 0; i < kCauses.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(i) + "=" + std::string(kCauses[i].name);
  }
  return s;
}

std::size_t cause_index(std::string_view name) {
  for (std::size_t i = 0; i < kCauses.size(); ++i) {
    if (kCauses[i].name == name) return i;
  }
  throw SchemaError("unknown dropout cause '" + std::string(name) + "'; valid causes: " + valid_cause_list());
}

std::string_view cause_name(std::size_t index) {
  if (index >= kCauses.size()) {
    throw SchemaError("cause index " + std::to_string(index) + " out of range; valid causes: " + valid_cause_list());
  }
  return kCauses[index].name;
}

}  // namespace msnf::data

// SPDX-License-Identifier: Apache-2.0
#include "msnf/model/config.hpp"

#include <charconv>
#include <sstream>

#include "msnf/error.hpp"

namespace msnf {

namespace {

const std::string& require(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint metadata lacks '" + key + "'");
  return it->second;
}

std::size_t parse_count(const std::string& s, const std::string& key) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("metadata '" + key + "' is not a count: '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const std::string& key) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("metadata '" + key + "' is not a real: '" + s + "'");
  }
  return v;
}

std::string hex(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Modalities::to_string() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(temporal, "temporal");
  add(static_info, "static");
  add(notes, "notes");
  return s;
}

Modalities Modalities::parse(const std::string& s) {
  Modalities m{false, false, false};
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok == "temporal") {
      m.temporal = true;
    } else if (tok == "static") {
      m.static_info = true;
    } else if (tok == "notes") {
      m.notes = true;
    } else {
      throw ParameterError("unknown modality '" + tok + "' (expected temporal, static, notes)");
    }
  }
  if (!m.any()) throw ParameterError("at least one modality must be enabled");
  return m;
}

std::size_t ModelConfig::fused_width() const {
  return (modalities.temporal ? kTemporalOut : 0) + (modalities.static_info ? kStaticOut : 0) +
         (modalities.notes ? note_width() : 0);
}

std::map<std::string, std::string> ModelConfig::to_meta() const {
  return {
      {"model.note_dim", std::to_string(note_dim)},
      {"model.hidden_note", std::to_string(hidden_note)},
      {"model.head_width", std::to_string(head_width)},
      {"model.dropout_rate", hex(dropout_rate)},
      {"model.activation", ops::to_string(activation)},
      {"model.bn_epsilon", hex(bn_epsilon)},
      {"model.bn_momentum", hex(bn_momentum)},
      {"model.modalities", modalities.to_string()},
  };
}

ModelConfig ModelConfig::from_meta(const std::map<std::string, std::string>& meta) {
  ModelConfig c;
  c.note_dim = parse_count(require(meta, "model.note_dim"), "model.note_dim");
  c.hidden_note = parse_count(require(meta, "model.hidden_note"), "model.hidden_note");
  c.head_width = parse_count(require(meta, "model.head_width"), "model.head_width");
  c.dropout_rate = parse_real(require(meta, "model.dropout_rate"), "model.dropout_rate");
  c.activation = ops::activation_from_string(require(meta, "model.activation"));
  c.bn_epsilon = parse_real(require(meta, "model.bn_epsilon"), "model.bn_epsilon");
  c.bn_momentum = parse_real(require(meta, "model.bn_momentum"), "model.bn_momentum");
  c.modalities = Modalities::parse(require(meta, "model.modalities"));
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  if (note_dim == 0 || hidden_note == 0 || head_width == 0) {
    throw ParameterError("model widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ParameterError("dropout rate must be in [0, 1)");
  if (!(bn_epsilon > 0.0)) throw ParameterError("batch-norm epsilon must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw ParameterError("batch-norm momentum must be in [0, 1)");
  if (!modalities.any()) throw ParameterError("at least one modality must be enabled");
}

}  // namespace msnf

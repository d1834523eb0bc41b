// SPDX-License-Identifier: Apache-2.0
#include "msnf/harness/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "msnf/error.hpp"

namespace msnf::harness {

using json = nlohmann::ordered_json;

const char* to_string(SplitMode m) { return m == SplitMode::holdout ? "holdout" : "kfold"; }

const char* to_string(Mitigation m) {
  switch (m) {
    case Mitigation::none: return "none";
    case Mitigation::reweigh: return "reweigh";
    case Mitigation::regularizer: return "regularizer";
  }
  return "none";
}

Mitigation mitigation_from_string(std::string_view s) {
  if (s == "none") return Mitigation::none;
  if (s == "reweigh") return Mitigation::reweigh;
  if (s == "regularizer") return Mitigation::regularizer;
  throw ParameterError("unknown mitigation '" + std::string(s) + "' (none, reweigh, regularizer)");
}

namespace {

SplitMode split_from_string(const std::string& s) {
  if (s == "holdout") return SplitMode::holdout;
  if (s == "kfold") return SplitMode::kfold;
  throw ParameterError("unknown split mode '" + s + "' (holdout, kfold)");
}

json encode(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["cohort"] = {{"n_students", c.cohort.n_students},
                 {"dropout_rate", c.cohort.dropout_rate},
                 {"temporary_share", c.cohort.temporary_share},
                 {"male_share", c.cohort.male_share},
                 {"signal_strength", c.cohort.signal_strength},
                 {"gender_label_bias", c.cohort.gender_label_bias}};
  j["model"] = {{"note_dim", c.model.note_dim},
                {"hidden_note", c.model.hidden_note},
                {"head_width", c.model.head_width},
                {"dropout_rate", c.model.dropout_rate},
                {"activation", ops::to_string(c.model.activation)},
                {"bn_epsilon", c.model.bn_epsilon},
                {"bn_momentum", c.model.bn_momentum},
                {"modalities", c.model.modalities.to_string()}};
  j["schedule"] = {{"learning_rates", c.schedule.learning_rates},
                   {"iterations", c.schedule.iterations},
                   {"scale", c.schedule.scale},
                   {"batch_size", c.schedule.batch_size},
                   {"momentum", c.schedule.momentum}};
  j["split"] = {{"mode", to_string(c.split.mode)}, {"k", c.split.k}, {"train_fraction", c.split.train_fraction}};
  j["smote"] = {{"enabled", c.smote.enabled}, {"k", c.smote.k}, {"target_ratio", c.smote.target_ratio}};
  j["fairness"] = {{"protected_attribute", c.fairness.protected_attribute},
                   {"mitigation", to_string(c.fairness.mitigation)},
                   {"eta", c.fairness.eta}};
  j["mask_rule3"] = c.mask_rule3;
  j["init_duration_head"] = c.init_duration_head;
  j["embedder"] = c.embedder;
  return j;
}

template <class T>
void get(const json& j, const char* key, T& out, const std::string& path) {
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParameterError("config key '" + path + key + "' has the wrong type");
  }
}

RunConfig decode(const json& j) {
  RunConfig c;
  get(j, "seed", c.seed, "");
  const json& co = j.at("cohort");
  get(co, "n_students", c.cohort.n_students, "cohort.");
  get(co, "dropout_rate", c.cohort.dropout_rate, "cohort.");
  get(co, "temporary_share", c.cohort.temporary_share, "cohort.");
  get(co, "male_share", c.cohort.male_share, "cohort.");
  get(co, "signal_strength", c.cohort.signal_strength, "cohort.");
  get(co, "gender_label_bias", c.cohort.gender_label_bias, "cohort.");
  const json& m = j.at("model");
  get(m, "note_dim", c.model.note_dim, "model.");
  get(m, "hidden_note", c.model.hidden_note, "model.");
  get(m, "head_width", c.model.head_width, "model.");
  get(m, "dropout_rate", c.model.dropout_rate, "model.");
  std::string s;
  get(m, "activation", s, "model.");
  c.model.activation = ops::activation_from_string(s);
  get(m, "bn_epsilon", c.model.bn_epsilon, "model.");
  get(m, "bn_momentum", c.model.bn_momentum, "model.");
  get(m, "modalities", s, "model.");
  c.model.modalities = Modalities::parse(s);
  const json& sc = j.at("schedule");
  get(sc, "learning_rates", c.schedule.learning_rates, "schedule.");
  get(sc, "iterations", c.schedule.iterations, "schedule.");
  get(sc, "scale", c.schedule.scale, "schedule.");
  get(sc, "batch_size", c.schedule.batch_size, "schedule.");
  get(sc, "momentum", c.schedule.momentum, "schedule.");
  const json& sp = j.at("split");
  get(sp, "mode", s, "split.");
  c.split.mode = split_from_string(s);
  get(sp, "k", c.split.k, "split.");
  get(sp, "train_fraction", c.split.train_fraction, "split.");
  const json& sm = j.at("smote");
  get(sm, "enabled", c.smote.enabled, "smote.");
  get(sm, "k", c.smote.k, "smote.");
  get(sm, "target_ratio", c.smote.target_ratio, "smote.");
  const json& f = j.at("fairness");
  get(f, "protected_attribute", c.fairness.protected_attribute, "fairness.");
  get(f, "mitigation", s, "fairness.");
  c.fairness.mitigation = mitigation_from_string(s);
  get(f, "eta", c.fairness.eta, "fairness.");
  get(j, "mask_rule3", c.mask_rule3, "");
  get(j, "init_duration_head", c.init_duration_head, "");
  get(j, "embedder", c.embedder, "");
  return c;
}

// Overlays `patch` onto `base`; every patch key must already exist in base.
void merge(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ParameterError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    if (!base.contains(key)) throw ParameterError("unknown config key '" + path + key + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge(slot, value, path + key + ".");
    } else {
      slot = value;
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  cohort.validate();
  model.validate();
  schedule.validate();
  if (split.mode == SplitMode::kfold && split.k < 2) throw ParameterError("split.k must be at least 2");
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw ParameterError("split.train_fraction must lie in (0, 1)");
  }
  if (smote.k == 0) throw ParameterError("smote.k must be positive");
  if (!(smote.target_ratio > 0.0)) throw ParameterError("smote.target_ratio must be positive");
  if (fairness.protected_attribute != "gender") {
    throw ParameterError("fairness.protected_attribute '" + fairness.protected_attribute +
                         "' is not available; records carry 'gender' only");
  }
  if (!(fairness.eta >= 0.0)) throw ParameterError("fairness.eta must be nonnegative");
  if (embedder != "hashing") {
    constexpr std::string_view prefix = "precomputed:";
    if (embedder.rfind(prefix, 0) != 0) {
      throw ParameterError("embedder must be 'hashing' or 'precomputed:<path>', got '" + embedder + "'");
    }
    const std::filesystem::path p = embedder.substr(prefix.size());
    if (!std::filesystem::is_regular_file(p)) throw FormatError("embedding table " + p.string() + " does not exist");
  }
}

RunConfig parse_run_config(std::string_view text) {
  json patch;
  try {
    patch = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  json j = encode(RunConfig{});
  merge(j, patch, "");
  RunConfig c = decode(j);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string to_json(const RunConfig& config) { return encode(config).dump(); }

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParameterError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json j = encode(config);
  json* slot = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!slot->is_object() || !slot->contains(part)) throw ParameterError("unknown config key '" + key + "'");
    slot = &(*slot)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (slot->is_object()) throw ParameterError("config key '" + key + "' names a section, not a value");
  *slot = value;
  RunConfig c = decode(j);
  c.validate();
  config = std::move(c);
}

}  // namespace msnf::harness

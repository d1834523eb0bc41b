// SPDX-License-Identifier: Apache-2.0
#include "msnf/harness/commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "msnf/data/generator.hpp"
#include "msnf/data/sampling.hpp"
#include "msnf/data/schema.hpp"
#include "msnf/engine/checkpoint.hpp"
#include "msnf/engine/rng.hpp"
#include "msnf/error.hpp"

namespace msnf::harness {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string cell(const std::optional<double>& v) { return v ? shortest(*v) : std::string(); }

json value_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed3(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw FormatError("failed writing " + path.string());
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

data::Dataset subset(const data::Dataset& data, const std::vector<std::size_t>& idx) {
  data::Dataset out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

data::Dataset read_nonempty(const fs::path& path) {
  auto data = data::read_dataset(path);
  if (data.empty()) throw EmptySetError("dataset " + path.string() + " has no records");
  return data;
}

std::string meta_or(const Checkpoint& ckpt, const std::string& key, const std::string& fallback) {
  auto it = ckpt.meta.find(key);
  return it == ckpt.meta.end() ? fallback : it->second;
}

MaskOptions mask_of(const Checkpoint& ckpt) { return MaskOptions{meta_or(ckpt, "run.mask_rule3", "false") == "true"}; }

struct Loaded {
  Checkpoint ckpt;
  MsnfModel model;
  std::vector<EncodedStudent> students;
};

Loaded load_for_inference(const fs::path& checkpoint, const fs::path& data_path) {
  Checkpoint ckpt = read_checkpoint(checkpoint);
  MsnfModel model = MsnfModel::from_checkpoint(ckpt);
  const auto data = read_nonempty(data_path);
  const std::size_t dim = model.config().note_dim;
  auto embedder = make_embedder(meta_or(ckpt, "run.embedder", "hashing"), dim, note_ids(data));
  if (embedder->dim() != dim) {
    throw DimensionError("checkpoint expects note embeddings of dim " + std::to_string(dim) + ", embedder gives " +
                         std::to_string(embedder->dim()));
  }
  auto students = data::encode_dataset(data, *embedder);
  return {std::move(ckpt), std::move(model), std::move(students)};
}

std::string metrics_line(const EvaluationReport& r) {
  return "FD " + fixed3(r.tasks[kFD].value) + "  TD " + fixed3(r.tasks[kTD].value) + "  ND " +
         fixed3(r.tasks[kND].value) + "  DD " + fixed3(r.tasks[kDD].value) + " (mean baseline " +
         fixed3(r.dd_mean_baseline) + ")  CD " + fixed3(r.tasks[kCD].value);
}

json fairness_json(const fairness::FairnessReport& r, double accuracy) {
  auto flag = [](const std::optional<bool>& f) { return f ? json(*f) : json(nullptr); };
  return {{"spd", value_or_null(r.spd)},         {"eod", value_or_null(r.eod)},
          {"aod", value_or_null(r.aod)},         {"di", value_or_null(r.di)},
          {"spd_fair", flag(r.spd_fair)},        {"eod_fair", flag(r.eod_fair)},
          {"aod_fair", flag(r.aod_fair)},        {"di_fair", flag(r.di_fair)},
          {"fair_count", r.fair_count()},        {"fd_accuracy", accuracy}};
}

void print_fairness(std::ostream& log, const char* name, const fairness::FairnessReport& r, double accuracy) {
  auto mark = [](const std::optional<bool>& f) { return !f ? "  " : *f ? " *" : "  "; };
  log << name << "  SPD " << fixed3(r.spd) << mark(r.spd_fair) << "  EOD " << fixed3(r.eod) << mark(r.eod_fair)
      << "  AOD " << fixed3(r.aod) << mark(r.aod_fair) << "  DI " << fixed3(r.di) << mark(r.di_fair) << "  FD acc "
      << fixed3(accuracy) << '\n';
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kDiverged;
  if (dynamic_cast<const DimensionError*>(&e)) return kDimMismatch;
  if (dynamic_cast<const EmptySetError*>(&e)) return kEmptyTestSet;
  if (dynamic_cast<const SingleGroupError*>(&e)) return kSingleGroup;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kIoError;
  }
  return kFailure;
}

std::unique_ptr<text::Embedder> make_embedder(const std::string& spec, std::size_t dim,
                                              const std::vector<std::string>& required_ids) {
  if (spec == "hashing") return std::make_unique<text::HashingEmbedder>(dim, 0);
  constexpr std::string_view prefix = "precomputed:";
  if (spec.rfind(prefix, 0) == 0) {
    return std::make_unique<text::PrecomputedEmbedder>(text::load_precomputed(spec.substr(prefix.size())),
                                                       required_ids);
  }
  throw ParameterError("unknown embedder '" + spec + "'");
}

std::vector<std::string> note_ids(const data::Dataset& data) {
  std::set<std::string> ids;
  for (const auto& r : data) {
    for (const auto& n : r.notes) ids.insert(n.id);
  }
  return {ids.begin(), ids.end()};
}

std::uint64_t fold_seed(std::uint64_t run_seed, std::size_t fold) { return derive_seed(run_seed, 0xf00 + fold); }

FitResult fit_model(const data::Dataset& train_records, const RunConfig& config, std::uint64_t seed,
                    Mitigation mitigation) {
  if (train_records.empty()) throw EmptySetError("no training records");
  data::Dataset records = train_records;
  if (config.smote.enabled) {
    records = data::smote_rebalance(records, {config.smote.k, config.smote.target_ratio, derive_seed(seed, 1)});
  }
  auto embedder = make_embedder(config.embedder, config.model.note_dim, note_ids(records));
  const auto students = data::encode_dataset(records, *embedder);

  FitResult r{MsnfModel(config.model, derive_seed(seed, 2)), {}, students.size()};
  r.model.fit_scaler(students);
  const MaskOptions mask{config.mask_rule3};
  if (config.init_duration_head) initialize_duration_head(r.model, students, mask);

  TrainOptions opt;
  opt.schedule = config.schedule;
  opt.seed = derive_seed(seed, 3);
  opt.mask = mask;
  if (mitigation == Mitigation::reweigh) {
    auto priv = std::make_unique<bool[]>(students.size());
    std::vector<int> labels(students.size());
    for (std::size_t i = 0; i < students.size(); ++i) {
      priv[i] = students[i].privileged;
      labels[i] = students[i].labels.dropout ? 1 : 0;
    }
    opt.sample_weights = fairness::reweigh({priv.get(), students.size()}, labels, 0);
  } else if (mitigation == Mitigation::regularizer) {
    opt.regularizer_eta = config.fairness.eta;
  }
  r.trace = train(r.model, students, opt);
  return r;
}

fairness::GroupOutcomes fd_outcomes(std::span<const StudentPrediction> predictions) {
  fairness::GroupOutcomes g;
  for (const auto& p : predictions) g.add(p.privileged, !p.labels.dropout, !p.fd);
  return g;
}

double fd_accuracy(std::span<const StudentPrediction> predictions) {
  if (predictions.empty()) throw EmptySetError("no predictions");
  std::size_t hit = 0;
  for (const auto& p : predictions) hit += p.fd == p.labels.dropout ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(predictions.size());
}

int cmd_generate(const RunConfig& config, const fs::path& out, bool csv, std::ostream& log) {
  data::CohortSpec spec = config.cohort;
  spec.seed = config.seed;
  const auto cohort = data::generate_cohort(spec);
  data::write_dataset(out, cohort);
  if (csv) {
    data::write_static_csv(with_suffix(out, ".static.csv"), cohort);
    data::write_performance_csv(with_suffix(out, ".performance.csv"), cohort);
  }
  log << "wrote " << cohort.size() << " students to " << out.string() << "\n\n"
      << data::summarize_cohort(cohort).table();
  return kOk;
}

int cmd_train(const RunConfig& config, const fs::path& data_path, const fs::path& out, std::ostream& log) {
  config.validate();
  const auto data = read_nonempty(data_path);
  std::vector<data::Fold> folds;
  if (config.split.mode == SplitMode::holdout) {
    folds.push_back(data::holdout_split(data, config.split.train_fraction, derive_seed(config.seed, 0x5b1)));
  } else {
    folds = data::split_folds(data, config.split.k, derive_seed(config.seed, 0x5b1));
  }

  std::vector<EvaluationReport> reports;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train_set = subset(data, folds[f].train);
    const auto test_set = subset(data, folds[f].test);
    if (test_set.empty()) throw EmptySetError("split " + std::to_string(f) + " has an empty test set");
    const std::uint64_t seed = fold_seed(config.seed, f);
    FitResult fit = fit_model(train_set, config, seed, config.fairness.mitigation);

    const fs::path ckpt = config.split.mode == SplitMode::holdout ? out : with_suffix(out, ".fold" + std::to_string(f));
    fit.model.save(ckpt, {{"run.seed", std::to_string(seed)},
                          {"run.fold", std::to_string(f)},
                          {"run.embedder", config.embedder},
                          {"run.mask_rule3", config.mask_rule3 ? "true" : "false"},
                          {"run.mitigation", to_string(config.fairness.mitigation)},
                          {"run.config", to_json(config)}});
    {
      const fs::path p = with_suffix(ckpt, ".trace.csv");
      auto os = open_out(p);
      os << "iteration,learning_rate,loss\n";
      for (std::size_t i = 0; i < fit.trace.loss_trace.size(); ++i) {
        os << i << ',' << shortest(config.schedule.learning_rate(i)) << ',' << shortest(fit.trace.loss_trace[i])
           << '\n';
      }
      finish(os, p);
    }
    data::write_dataset(with_suffix(ckpt, ".train.jsonl"), train_set);
    data::write_dataset(with_suffix(ckpt, ".test.jsonl"), test_set);

    auto embedder = make_embedder(config.embedder, config.model.note_dim, note_ids(test_set));
    const auto students = data::encode_dataset(test_set, *embedder);
    reports.push_back(evaluate(fit.model, students, MaskOptions{config.mask_rule3}));
    const auto& trace = fit.trace.loss_trace;
    log << "split " << f << ": " << train_set.size() << " train (" << fit.train_size << " after SMOTE), "
        << test_set.size() << " test, " << trace.size() << " iterations, loss "
        << fixed3(trace.empty() ? std::nullopt : std::optional<double>(trace.front())) << " -> "
        << fixed3(trace.empty() ? std::nullopt : std::optional<double>(trace.back())) << "\n  test: "
        << metrics_line(reports.back()) << "\n  checkpoint " << ckpt.string() << '\n';
  }
  if (reports.size() > 1) {
    EvaluationReport mean;
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : reports) {
        if (r.tasks[t].value) {
          sum += *r.tasks[t].value;
          ++n;
        }
      }
      if (n) mean.tasks[t].value = sum / static_cast<double>(n);
    }
    double base = 0.0;
    std::size_t nb = 0;
    for (const auto& r : reports) {
      if (r.dd_mean_baseline) {
        base += *r.dd_mean_baseline;
        ++nb;
      }
    }
    if (nb) mean.dd_mean_baseline = base / static_cast<double>(nb);
    log << "mean over " << reports.size() << " splits: " << metrics_line(mean) << '\n';
  }
  return kOk;
}

int cmd_evaluate(const fs::path& checkpoint, const fs::path& data_path, const fs::path& out, std::ostream& log) {
  Loaded in = load_for_inference(checkpoint, data_path);
  const EvaluationReport r = evaluate(in.model, in.students, mask_of(in.ckpt));

  json m;
  m["format"] = kMetricsFormat;
  m["n"] = r.n;
  json tasks = json::object();
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    json e = {{"metric", t == kDD ? "rmsd" : "accuracy"}, {"value", value_or_null(r.tasks[t].value)},
              {"n", r.tasks[t].n}};
    if (t == kDD) e["mean_baseline"] = value_or_null(r.dd_mean_baseline);
    tasks[task_name(t)] = e;
  }
  m["tasks"] = tasks;
  {
    const fs::path p = with_suffix(out, ".metrics.json");
    auto os = open_out(p);
    os << m.dump(2) << '\n';
    finish(os, p);
  }
  {
    const fs::path p = with_suffix(out, ".note_count.csv");
    auto os = open_out(p);
    os << "bucket,lo,hi,n,fd_accuracy,td_accuracy,nd_accuracy,dd_rmsd,cd_accuracy\n";
    for (const auto& b : r.note_buckets) {
      os << b.label() << ',' << b.lo << ',' << (b.hi ? std::to_string(*b.hi) : std::string()) << ',' << b.n;
      for (const auto& t : b.tasks) os << ',' << cell(t.value);
      os << '\n';
    }
    finish(os, p);
  }
  {
    const fs::path p = with_suffix(out, ".causes.csv");
    auto os = open_out(p);
    os << "cause_index,cause,n,accuracy\n";
    for (const auto& c : r.per_cause) {
      os << c.cause << ',' << data::cause_name(c.cause) << ',' << c.n << ',' << shortest(c.accuracy) << '\n';
    }
    finish(os, p);
  }
  log << r.n << " students: " << metrics_line(r) << '\n';
  return kOk;
}

int cmd_audit(const fs::path& checkpoint, const fs::path& data_path, const RunConfig& config,
              const std::optional<fs::path>& train_data, const fs::path& out, std::ostream& log) {
  Loaded in = load_for_inference(checkpoint, data_path);
  const auto preds = predict_students(in.model, in.students);
  const auto outcomes = fd_outcomes(preds);
  if (outcomes.group_size(fairness::kPrivileged) == 0 || outcomes.group_size(fairness::kUnprivileged) == 0) {
    throw SingleGroupError(std::string("audit needs both genders; the data holds only ") +
                           (outcomes.group_size(fairness::kPrivileged) ? "male" : "female") + " students");
  }
  const auto before = fairness::compute_metrics(outcomes);
  const double before_acc = fd_accuracy(preds);

  json rep;
  rep["format"] = kAuditFormat;
  rep["task"] = "FD";
  rep["protected_attribute"] = config.fairness.protected_attribute;
  rep["privileged"] = "male";
  rep["favorable"] = "no_dropout";
  rep["n"] = preds.size();
  rep["n_privileged"] = outcomes.group_size(fairness::kPrivileged);
  rep["n_unprivileged"] = outcomes.group_size(fairness::kUnprivileged);
  rep["before"] = fairness_json(before, before_acc);
  rep["mitigation"] = to_string(config.fairness.mitigation);
  rep["after"] = nullptr;
  rep["accuracy_delta"] = nullptr;
  print_fairness(log, "before", before, before_acc);

  if (config.fairness.mitigation != Mitigation::none) {
    if (!train_data) throw ParameterError("a mitigated audit retrains and needs the training data (--train-data)");
    RunConfig paired = config;
    paired.model = in.model.config();
    paired.mask_rule3 = mask_of(in.ckpt).rule3;
    paired.embedder = meta_or(in.ckpt, "run.embedder", config.embedder);
    std::uint64_t seed = config.seed;
    const std::string s = meta_or(in.ckpt, "run.seed", "");
    if (!s.empty()) std::from_chars(s.data(), s.data() + s.size(), seed);
    FitResult fit = fit_model(read_nonempty(*train_data), paired, seed, config.fairness.mitigation);
    const auto mitigated = predict_students(fit.model, in.students);
    const auto after = fairness::compute_metrics(fd_outcomes(mitigated));
    const double after_acc = fd_accuracy(mitigated);
    rep["after"] = fairness_json(after, after_acc);
    rep["accuracy_delta"] = after_acc - before_acc;
    print_fairness(log, "after ", after, after_acc);
    log << "accuracy delta " << fixed3(after_acc - before_acc) << " (" << to_string(config.fairness.mitigation)
        << ")\n";
  }
  auto os = open_out(out);
  os << rep.dump(2) << '\n';
  finish(os, out);
  log << "(* = within the fairness target range)\n";
  return kOk;
}

}  // namespace msnf::harness

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msnf/data/record.hpp"
#include "msnf/error.hpp"
#include "msnf/fairness/fairness.hpp"
#include "msnf/harness/config.hpp"
#include "msnf/model/evaluation.hpp"

namespace msnf::harness {

/// Process exit codes. Stable; scripts may rely on them.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,        // bad config, bad arguments, anything not listed below
  kIoError = 2,        // missing, unreadable, unwritable or malformed file
  kDiverged = 3,       // training loss became NaN or infinite
  kDimMismatch = 4,    // checkpoint and data (or embeddings) disagree on a width
  kEmptyTestSet = 5,   // nothing to evaluate
  kSingleGroup = 6,    // fairness audit with only one protected group present
};

class EmptySetError : public Error {
 public:
  using Error::Error;
};

class SingleGroupError : public Error {
 public:
  using Error::Error;
};

/// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e);

inline constexpr const char* kMetricsFormat = "msnf.metrics/1";
inline constexpr const char* kAuditFormat = "msnf.audit/1";

/// Builds the note embedder named by `spec` ("hashing" or "precomputed:<path>").
/// The precomputed table must cover `required_ids`.
std::unique_ptr<text::Embedder> make_embedder(const std::string& spec, std::size_t dim,
                                              const std::vector<std::string>& required_ids = {});
std::vector<std::string> note_ids(const data::Dataset& data);

/// One training run on `train_records`: optional SMOTE, scaler fit, DD bias
/// init, optional reweighing or regularizer, then SGD. Deterministic in
/// (records, config, seed, mitigation).
struct FitResult {
  MsnfModel model;
  TrainResult trace;
  std::size_t train_size = 0;  // after SMOTE
};
FitResult fit_model(const data::Dataset& train_records, const RunConfig& config, std::uint64_t seed,
                    Mitigation mitigation);

/// Seed used for fold `fold` of a run.
std::uint64_t fold_seed(std::uint64_t run_seed, std::size_t fold);

/// FD confusion split by gender (male privileged), favorable = no dropout.
fairness::GroupOutcomes fd_outcomes(std::span<const StudentPrediction> predictions);
double fd_accuracy(std::span<const StudentPrediction> predictions);

// Commands. Each returns kOk or throws; `log` gets the human-readable output.

/// Writes the cohort to `out` (JSONL) and prints the Gender | Count | Dropout |
/// Temporary | Permanent table. With `csv`, also writes `<out>.static.csv` and
/// `<out>.performance.csv`.
int cmd_generate(const RunConfig& config, const std::filesystem::path& out, bool csv, std::ostream& log);

/// Splits, trains and writes per split: the checkpoint, `<ckpt>.trace.csv`,
/// `<ckpt>.train.jsonl` and `<ckpt>.test.jsonl`. Holdout writes the checkpoint
/// at `out`; k-fold writes `<out>.fold<i>`. Prints test metrics per split and
/// their mean.
int cmd_train(const RunConfig& config, const std::filesystem::path& data_path, const std::filesystem::path& out,
              std::ostream& log);

/// Writes `<out>.metrics.json`, `<out>.note_count.csv` and `<out>.causes.csv`.
int cmd_evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& data_path,
                 const std::filesystem::path& out, std::ostream& log);

/// Audits FD predictions of `checkpoint` on `data_path` and writes a JSON
/// report to `out`. When config.fairness.mitigation is set, retrains on
/// `train_data` with the checkpoint's seed and reports the mitigated metrics
/// next to the original ones.
int cmd_audit(const std::filesystem::path& checkpoint, const std::filesystem::path& data_path,
              const RunConfig& config, const std::optional<std::filesystem::path>& train_data,
              const std::filesystem::path& out, std::ostream& log);

}  // namespace msnf::harness

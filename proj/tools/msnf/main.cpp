// SPDX-License-Identifier: Apache-2.0
// msnf: generate | train | evaluate | audit | config

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msnf/harness/commands.hpp"

namespace h = msnf::harness;

namespace {

constexpr const char* kExitCodes =
    "exit codes: 0 ok, 1 bad config or arguments, 2 file missing/unreadable/malformed, 3 training diverged,\n"
    "            4 dimension mismatch, 5 empty evaluation set, 6 audit data holds a single group";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal multi-task dropout prediction: synthetic cohorts, training, evaluation, fairness audits"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();  // --config/--set may follow the subcommand

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "JSON run config (comments allowed)");
  app.add_option("-s,--set", overrides, "override a config key, e.g. --set schedule.scale=10")->take_all();

  std::string out, data, checkpoint, train_data;
  bool csv = false;

  auto* gen = app.add_subcommand("generate", "write a synthetic cohort (JSONL) and print its summary table");
  gen->add_option("-o,--out", out, "output dataset path")->required();
  gen->add_flag("--csv", csv, "also write <out>.static.csv and <out>.performance.csv");

  auto* tr = app.add_subcommand("train", "split, train and write checkpoints, loss traces and split files");
  tr->add_option("-d,--data", data, "dataset (JSONL)")->required();
  tr->add_option("-o,--out", out, "checkpoint path (k-fold appends .fold<i>)")->required();

  auto* ev = app.add_subcommand("evaluate", "per-task metrics plus note-count and per-cause breakdowns");
  ev->add_option("-m,--checkpoint", checkpoint, "checkpoint")->required();
  ev->add_option("-d,--data", data, "dataset to evaluate (JSONL)")->required();
  ev->add_option("-o,--out", out, "output prefix for .metrics.json, .note_count.csv, .causes.csv")->required();

  auto* au = app.add_subcommand("audit", "gender fairness of the dropout predictions, optionally mitigated");
  au->add_option("-m,--checkpoint", checkpoint, "checkpoint")->required();
  au->add_option("-d,--data", data, "dataset to audit (JSONL)")->required();
  au->add_option("-t,--train-data", train_data, "training records, needed when a mitigation is configured");
  au->add_option("-o,--out", out, "audit report path (JSON)")->required();

  auto* cf = app.add_subcommand("config", "print the effective config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    h::RunConfig config = config_path.empty() ? h::RunConfig{} : h::load_run_config(config_path);
    for (const auto& o : overrides) h::apply_override(config, o);
    config.validate();

    if (gen->parsed()) return h::cmd_generate(config, out, csv, std::cout);
    if (tr->parsed()) return h::cmd_train(config, data, out, std::cout);
    if (ev->parsed()) return h::cmd_evaluate(checkpoint, data, out, std::cout);
    if (au->parsed()) {
      std::optional<std::filesystem::path> td;
      if (!train_data.empty()) td = train_data;
      return h::cmd_audit(checkpoint, data, config, td, out, std::cout);
    }
    if (cf->parsed()) {
      std::cout << h::to_json(config) << '\n';
      return h::kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "msnf: " << e.what() << '\n';
    return h::exit_code_for(e);
  }
  return h::kFailure;
}

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "mirrorbench/core.hpp"
#include "mirrorbench/harness.hpp"

namespace {

using namespace mirrorbench;

void print_summary(const RunSummary& summary, const std::string& run_dir) {
  std::printf("engine       %s\n", std::string(to_string(summary.engine)).c_str());
  std::printf("dataset      %s (%d questions, %d completed)\n",
              std::string(to_string(summary.dataset)).c_str(), summary.questions,
              summary.completed);
  std::printf("accuracy     %.4f (%d correct, %d abstained, %d tie-decided)\n", summary.accuracy,
              summary.correct, summary.abstained, summary.tie_decided);
  std::printf("calls        %ld (retries %ld, malformed feedback %d)\n",
              static_cast<long>(summary.total_calls), static_cast<long>(summary.total_retries),
              summary.malformed_feedback);
  std::printf("ece         ");
  for (const auto& kv : summary.ece) std::printf(" %s %.4f", kv.first.c_str(), kv.second);
  std::printf("\n");
  if (!summary.incomplete_questions.empty()) {
    std::printf("incomplete   %zu question(s):", summary.incomplete_questions.size());
    for (const auto& id : summary.incomplete_questions) std::printf(" %s", id.c_str());
    std::printf("\n");
  }
  std::printf("output       %s\n", run_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-ensemble decoding runner: reflective resampling with checklist feedback, "
               "majority-vote baselines, and sample-based confidence calibration."};
  app.require_subcommand(1);

  // run
  std::string manifest_path;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> limit;
  bool resume = false;
  auto* run_cmd = app.add_subcommand("run", "Execute the experiment described by a manifest");
  run_cmd->add_option("-m,--manifest", manifest_path, "Manifest JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output-dir", output_dir, "Override the manifest's output_dir");
  run_cmd->add_option("-w,--workers", workers, "Override the manifest's worker count");
  run_cmd->add_option("--seed", seed, "Override the manifest's seed");
  run_cmd->add_option("--limit", limit, "Override the dataset limit");
  run_cmd->add_flag("--resume", resume, "Continue an interrupted run in the same output dir");

  // report
  std::string report_dir;
  auto* report_cmd =
      app.add_subcommand("report", "Recompute summary and tables from a run directory");
  report_cmd->add_option("run_dir", report_dir, "Run directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  // validate-manifest
  std::string validate_path;
  auto* validate_cmd =
      app.add_subcommand("validate-manifest", "Parse a manifest and print its normalized form");
  validate_cmd->add_option("manifest", validate_path, "Manifest JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  // make-script
  std::string freeze_dir;
  std::string freeze_out;
  auto* freeze_cmd = app.add_subcommand(
      "make-script", "Extract a replayable response script from a run's records");
  freeze_cmd->add_option("run_dir", freeze_dir, "Run directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  freeze_cmd->add_option("script", freeze_out, "Output script path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      RunManifest manifest = load_manifest_file(manifest_path);
      if (output_dir) manifest.output_dir = *output_dir;
      if (workers) manifest.workers = *workers;
      if (seed) manifest.seed = *seed;
      if (limit) manifest.dataset.limit = *limit;
      auto summary = run_experiment(manifest, resume);
      print_summary(summary, manifest.output_dir);
      return summary.incomplete_questions.empty() ? 0 : 2;
    }
    if (report_cmd->parsed()) {
      auto summary = write_report(report_dir);
      print_summary(summary, report_dir);
      return 0;
    }
    if (validate_cmd->parsed()) {
      RunManifest manifest = load_manifest_file(validate_path);
      std::printf("%s\n", to_json(manifest).dump(2).c_str());
      return 0;
    }
    if (freeze_cmd->parsed()) {
      auto count = freeze_script(freeze_dir, freeze_out);
      std::printf("wrote %zu entries to %s\n", count, freeze_out.c_str());
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "mirrorbench: error: %s\n", err.what());
    return 1;
  }
  return 0;
}

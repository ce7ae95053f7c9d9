#pragma once

#include <map>
#include <string>
#include <vector>

#include "mirrorbench/calibration.hpp"
#include "mirrorbench/core.hpp"

namespace mirrorbench {

/// Files inside a run directory.
struct RunPaths {
  std::string dir;
  std::string manifest;  // manifest.json, the echoed configuration
  std::string records;   // records.jsonl, sealed generation_record/1 lines
  std::string results;   // results.jsonl, sealed question_result/1 lines
  std::string summary;   // summary.json

  static RunPaths in(const std::string& dir);
  std::string accuracy_csv() const;
  std::string ece_csv() const;
  std::string reliability_csv(const std::string& metric) const;
};

struct RunSummary {
  EngineKind engine = EngineKind::mirror_consistency;
  DatasetKind dataset = DatasetKind::gsm8k;
  int questions = 0;   // dataset items in scope
  int completed = 0;   // questions with a full record set
  int correct = 0;
  int abstained = 0;   // completed but every response unparseable
  int tie_decided = 0;
  long long total_calls = 0;
  long long total_retries = 0;
  int malformed_feedback = 0;
  double accuracy = 0.0;  // correct / completed
  std::vector<std::pair<std::string, double>> ece;  // manifest metric order
  std::map<std::string, std::vector<ReliabilityBin>> reliability;
  std::vector<std::string> incomplete_questions;
};

/// Executes a manifest. Questions fan out across manifest.workers threads;
/// one committer writes records in dataset order, so the record files come
/// out byte-identical for any worker count. resume continues an existing run
/// directory: completed questions are kept verbatim (torn tails and partial
/// questions are compacted away) and only the rest execute. A fresh run
/// requires output_dir to not exist yet; resume requires the stored manifest
/// to echo-match the current one. Per-question engine failures keep their
/// partial records, leave the question incomplete, and do not abort the run.
/// Finishes by recomputing the report from the files it just wrote.
RunSummary run_experiment(const RunManifest& manifest, bool resume = false);

/// Rebuilds every derived output (summary.json and the csv tables) from the
/// sealed record files alone. Final votes are re-derived from raw records
/// through the same seeded vote streams and cross-checked against the stored
/// per-question rows; any disagreement throws. Zero completed questions is an
/// error.
RunSummary write_report(const std::string& run_dir);

/// Freezes a run's raw responses into a script file for offline replay.
/// Returns the number of entries written.
std::size_t freeze_script(const std::string& run_dir, const std::string& script_path);

}  // namespace mirrorbench

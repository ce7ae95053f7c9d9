#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mirrorbench {

// Insertion-ordered JSON everywhere: record fields must serialize in a fixed
// order so persisted files are byte-stable across runs.
using json = nlohmann::ordered_json;

inline constexpr std::string_view kGenerationRecordSchema = "generation_record/1";
inline constexpr std::string_view kQuestionResultSchema = "question_result/1";
inline constexpr std::string_view kRunManifestSchema = "run_manifest/1";
inline constexpr std::string_view kScriptEntrySchema = "script_entry/1";

enum class TaskKind { numeric, boolean, multiple_choice };
enum class AnswerKind { numeric, boolean, choice, unparseable };
enum class CallPurpose { sample, resample_with_feedback, contrast };
enum class EngineKind { standard_cot, self_consistency, mirror_consistency };
enum class TiePolicy { seeded_random, first_reached };
enum class DatasetKind { gsm8k, svamp, strategyqa, date };

std::string_view to_string(TaskKind k);
std::string_view to_string(AnswerKind k);
std::string_view to_string(CallPurpose p);
std::string_view to_string(EngineKind e);
std::string_view to_string(TiePolicy p);
std::string_view to_string(DatasetKind d);

TaskKind task_kind_from_string(std::string_view s);
AnswerKind answer_kind_from_string(std::string_view s);
CallPurpose call_purpose_from_string(std::string_view s);
EngineKind engine_kind_from_string(std::string_view s);
TiePolicy tie_policy_from_string(std::string_view s);
DatasetKind dataset_kind_from_string(std::string_view s);

/// Reduces a plain decimal string to canonical form: no leading zeros, no
/// trailing fraction zeros, no lone dot, "-0" becomes "0". Inputs that are not
/// plain signed decimals are returned unchanged.
std::string canonical_decimal_text(std::string_view s);

/// A parsed final answer in canonical form. Two keys with equal kind and value
/// are the same answer for voting purposes, except that unparseable never
/// matches anything (including another unparseable).
struct AnswerKey {
  AnswerKind kind = AnswerKind::unparseable;
  std::string value;  // canonical text; empty for unparseable

  static AnswerKey numeric(std::string text) {
    return {AnswerKind::numeric, canonical_decimal_text(text)};
  }
  static AnswerKey boolean(bool yes) { return {AnswerKind::boolean, yes ? "yes" : "no"}; }
  static AnswerKey choice(char letter) { return {AnswerKind::choice, std::string(1, letter)}; }
  static AnswerKey unparseable() { return {}; }

  bool parseable() const { return kind != AnswerKind::unparseable; }

  // Structural equality; containers and round-trip tests want this. Voting
  // and scoring must use answers_equal instead.
  bool operator==(const AnswerKey&) const = default;
};

/// Voting/scoring equality: unparseable matches nothing; numeric comparison is
/// exact on the canonical decimal ("42" equals "42.0").
bool answers_equal(const AnswerKey& a, const AnswerKey& b);

json to_json(const AnswerKey& k);
AnswerKey answer_key_from_json(const json& j);

struct QuestionItem {
  std::string id;
  TaskKind task_kind = TaskKind::numeric;
  std::string question_text;
  std::vector<std::string> options;  // multiple_choice only, in presentation order
  AnswerKey gold;
  std::string gold_surface;  // answer text as it appeared in the source file
};

/// Accumulated checklist of error-avoidance advice. revision counts accepted
/// <CHECKING> updates; revision == 0 iff entries is empty.
struct Checklist {
  std::vector<std::string> entries;
  int revision = 0;

  bool empty() const { return entries.empty(); }
};

/// One backend call, exactly as persisted. `extracted` is absent for contrast
/// calls (their output is feedback, not an answer attempt).
struct GenerationRecord {
  std::string question_id;
  int call_index = 0;
  CallPurpose purpose = CallPurpose::sample;
  std::string prompt_text;
  std::string raw_text;
  std::optional<AnswerKey> extracted;
  std::int64_t latency_ms = 0;
  int retry_count = 0;
};

json to_json(const GenerationRecord& r);
GenerationRecord generation_record_from_json(const json& j);

struct ResponseEntry {
  std::string raw_text;
  AnswerKey key;
};

/// Majority answer after round k, plus one verbatim supporter response that
/// serves as the "solution so far" shown to the contrast prompt.
struct MajorityEntry {
  AnswerKey key;
  std::string representative_text;
};

struct MirrorTrace {
  std::string question_id;
  std::vector<ResponseEntry> responses;       // r_0 .. r_K
  std::vector<Checklist> checklists;          // C_0 (empty) .. C_K
  std::vector<MajorityEntry> majorities;      // m_0 .. m_K
  std::vector<std::string> contrast_raw;      // K raw feedback texts
  int total_calls = 0;
};

/// The answers one engine produced for one question, ready for voting and
/// confidence scoring.
struct SampleSet {
  std::string question_id;
  std::vector<AnswerKey> answers;
  std::optional<AnswerKey> final_vote;
  int n = 0;
};

struct CalibrationPoint {
  std::string question_id;
  double confidence = 0.0;  // required in [0, 1]
  bool correct = false;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double backoff_factor = 2.0;
  double jitter_frac = 0.2;  // delay scaled by uniform [1-j, 1+j]
};

struct GenerationParams {
  double temperature = 0.4;
  int max_tokens = 1024;
  std::string model = "default";
  double timeout_s = 120.0;
  RetryPolicy retry;
};

struct BackendDesc {
  std::string kind = "scripted";  // "scripted" | "chat_completions"
  std::string endpoint;
  std::string api_key_env;
  std::string script_path;
  bool strict = true;           // scripted: error on missing key vs empty text
  int max_in_flight = 8;        // chat_completions concurrency cap
  int scripted_delay_ms = 0;    // scripted: artificial per-call delay
};

struct DatasetDesc {
  DatasetKind kind = DatasetKind::gsm8k;
  std::string path;
  int limit = -1;  // -1 = dataset default cap
};

struct ExtractionOverrides {
  std::string answer_marker;  // empty = default "So the answer is"
};

/// Everything a run needs; serialized verbatim (minus output_dir/workers) into
/// the run directory so results stay attributable and reproducible.
struct RunManifest {
  DatasetDesc dataset;
  EngineKind engine = EngineKind::mirror_consistency;
  int samples = 10;  // self_consistency sample count n
  int rounds = 9;    // mirror_consistency round count K
  GenerationParams params;
  BackendDesc backend;
  std::uint64_t seed = 1;
  std::vector<std::string> metrics = {"agree", "entropy", "fsd", "ans_num", "pairwise"};
  TiePolicy tie_policy = TiePolicy::seeded_random;
  int bins = 10;
  double min_bin_frac = 0.01;
  std::string chat_shape = "single_user";
  std::string output_dir;
  std::map<std::string, std::string> template_overrides;  // name -> file path
  ExtractionOverrides extraction;
  bool skip_contrast_on_agreement = false;
  int max_checklist_entries = 0;  // 0 = unlimited
  int workers = 1;
};

json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const json& j);
RunManifest load_manifest_file(const std::string& path);

/// Manifest echo destined for the run directory: identical content across
/// machines and worker counts, so output_dir and workers are dropped.
json manifest_echo_json(const RunManifest& m);

}  // namespace mirrorbench

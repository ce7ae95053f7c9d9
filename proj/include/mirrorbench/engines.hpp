#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mirrorbench/backend.hpp"
#include "mirrorbench/core.hpp"
#include "mirrorbench/prompts.hpp"

namespace mirrorbench {

enum class FeedbackKind { stop, checking, malformed };

/// Parsed contrast-call output. new_entries is non-empty exactly when kind is
/// checking.
struct ChecklistUpdate {
  FeedbackKind kind = FeedbackKind::malformed;
  std::vector<std::string> new_entries;
};

/// Classifies raw feedback text. "<STOP!>" anywhere (case-sensitive, brackets
/// required) wins over everything else. Otherwise the itemized lines after
/// the LAST "<CHECKING>" become new_entries: numbered items ("1." or "1)")
/// are accepted at a line start or when they continue the 1,2,3,... sequence
/// mid-line; "-", "*", or bullet items are accepted at a line start. Text
/// with markers but no itemization becomes one entry. Entry text has
/// whitespace runs collapsed to single spaces. A "<CHECKING>" with nothing
/// usable after it, or text with neither marker, is malformed.
ChecklistUpdate parse_feedback(const std::string& raw_text);

/// stop and malformed leave the checklist untouched. checking replaces the
/// entries wholesale (the contrast prompt asks the model to merge the old
/// checklist itself) and bumps revision; exact duplicates keep their first
/// position. max_entries > 0 truncates the result.
Checklist apply_update(const Checklist& prev, const ChecklistUpdate& update, int max_entries = 0);

/// Receives each GenerationRecord the moment its call completes, in call
/// order, so partial work survives a mid-question failure.
using RecordSink = std::function<void(const GenerationRecord&)>;

struct EngineConfig {
  TemplateSet templates = TemplateSet::defaults();
  GenerationParams params;
  ExtractionOverrides extraction;
  TiePolicy tie_policy = TiePolicy::seeded_random;
  std::uint64_t seed = 1;
  bool skip_contrast_on_agreement = false;
  int max_checklist_entries = 0;  // 0 = unlimited
};

struct SelfConsistencyRun {
  SampleSet samples;
  bool tie = false;
  std::vector<GenerationRecord> records;
};

/// n independent draws from the same sample prompt, then one majority vote
/// (rng stream "vote/<qid>/final"). Backend failures rethrow with the
/// question id attached after the sink has seen every completed record.
SelfConsistencyRun run_self_consistency(const QuestionItem& q, int n, TextBackend& backend,
                                        const EngineConfig& cfg, const RecordSink& sink = {});

struct MirrorRun {
  MirrorTrace trace;
  std::optional<AnswerKey> final_answer;  // absent when every response was unparseable
  bool tie = false;                       // the FINAL vote needed a tie break
  int malformed_feedback = 0;             // contrast outputs treated as stop
  std::vector<GenerationRecord> records;
};

/// Reflective resampling loop. Call 0 samples r_0; each round k in 1..K
/// resamples r_k under checklist C_{k-1} (call 2k-1), then a contrast call
/// (call 2k) compares round k-1's majority representative against r_k and
/// rewrites the checklist; m_k is the majority over r_0..r_k (rng streams
/// "vote/<qid>/<k>" and "rep/<qid>/<k>"). 2K+1 calls total. The
/// skip_contrast_on_agreement switch drops the contrast call when r_k already
/// matches m_{k-1} (checklist carried forward, empty string in contrast_raw),
/// which changes recorded call counts and is off by default.
MirrorRun run_mirror_consistency(const QuestionItem& q, int rounds, TextBackend& backend,
                                 const EngineConfig& cfg, const RecordSink& sink = {});

}  // namespace mirrorbench

#include "mirrorbench/engines.hpp"

#include <algorithm>
#include <cctype>

#include "mirrorbench/extraction.hpp"
#include "mirrorbench/rng.hpp"
#include "mirrorbench/voting.hpp"

namespace mirrorbench {

namespace {

constexpr std::string_view kStopMarker = "<STOP!>";
constexpr std::string_view kCheckingMarker = "<CHECKING>";
constexpr std::string_view kUtf8Bullet = "\xe2\x80\xa2";

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string collapse_ws(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_run = false;
  for (char c : text) {
    if (is_ws(c)) {
      in_run = true;
      continue;
    }
    if (in_run && !out.empty()) out.push_back(' ');
    in_run = false;
    out.push_back(c);
  }
  return out;
}

// Splits the text after a <CHECKING> marker into item texts. See the header
// for the acceptance rules; returns the unstructured whole as one item when
// no marker is accepted.
std::vector<std::string> parse_items(std::string_view tail) {
  struct Mark {
    std::size_t start;          // first byte of the marker itself
    std::size_t content_start;  // first byte after the marker and its spaces
  };
  std::vector<Mark> marks;
  int expected = 1;
  std::size_t i = 0;
  bool line_anchored = true;  // only whitespace since the last newline
  while (i < tail.size()) {
    char c = tail[i];
    if (c == '\n') {
      line_anchored = true;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    // Bullet items: "-", "*", or the UTF-8 bullet, line-anchored, then space.
    bool bullet = false;
    std::size_t marker_len = 0;
    if ((c == '-' || c == '*') && line_anchored) {
      bullet = true;
      marker_len = 1;
    } else if (line_anchored && tail.substr(i).starts_with(kUtf8Bullet)) {
      bullet = true;
      marker_len = kUtf8Bullet.size();
    }
    if (bullet && i + marker_len < tail.size() &&
        (tail[i + marker_len] == ' ' || tail[i + marker_len] == '\t')) {
      std::size_t content = i + marker_len;
      while (content < tail.size() && (tail[content] == ' ' || tail[content] == '\t')) ++content;
      marks.push_back({i, content});
      i = content;
      line_anchored = false;
      continue;
    }
    // Numbered items: up to three digits, '.' or ')', then whitespace. The
    // preceding boundary is guaranteed because scanning lands here only on a
    // non-space character that follows whitespace or an accepted marker.
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t d = i;
      while (d < tail.size() && d - i < 3 && std::isdigit(static_cast<unsigned char>(tail[d])))
        ++d;
      bool digits_ok = d > i && (d == tail.size() || !std::isdigit(static_cast<unsigned char>(tail[d])));
      if (digits_ok && d < tail.size() && (tail[d] == '.' || tail[d] == ')') &&
          (d + 1 == tail.size() || is_ws(tail[d + 1]))) {
        int value = 0;
        for (std::size_t p = i; p < d; ++p) value = value * 10 + (tail[p] - '0');
        if (line_anchored || value == expected) {
          std::size_t content = d + 1;
          while (content < tail.size() && (tail[content] == ' ' || tail[content] == '\t'))
            ++content;
          marks.push_back({i, content});
          expected = value + 1;
          i = content;
          line_anchored = false;
          continue;
        }
      }
    }
    // Plain text: skip the whole word so digits inside words never match.
    while (i < tail.size() && !is_ws(tail[i])) ++i;
    line_anchored = false;
  }

  std::vector<std::string> items;
  if (marks.empty()) {
    auto whole = collapse_ws(tail);
    if (!whole.empty()) items.push_back(std::move(whole));
    return items;
  }
  for (std::size_t m = 0; m < marks.size(); ++m) {
    std::size_t end = (m + 1 < marks.size()) ? marks[m + 1].start : tail.size();
    auto text = collapse_ws(tail.substr(marks[m].content_start, end - marks[m].content_start));
    if (!text.empty()) items.push_back(std::move(text));
  }
  return items;
}

}  // namespace

ChecklistUpdate parse_feedback(const std::string& raw_text) {
  if (raw_text.find(kStopMarker) != std::string::npos) {
    return ChecklistUpdate{FeedbackKind::stop, {}};
  }
  auto pos = raw_text.rfind(kCheckingMarker);
  if (pos == std::string::npos) return ChecklistUpdate{FeedbackKind::malformed, {}};
  auto items = parse_items(std::string_view(raw_text).substr(pos + kCheckingMarker.size()));
  if (items.empty()) return ChecklistUpdate{FeedbackKind::malformed, {}};
  return ChecklistUpdate{FeedbackKind::checking, std::move(items)};
}

Checklist apply_update(const Checklist& prev, const ChecklistUpdate& update, int max_entries) {
  if (update.kind != FeedbackKind::checking) return prev;
  Checklist next;
  next.revision = prev.revision + 1;
  for (const auto& entry : update.new_entries) {
    if (std::find(next.entries.begin(), next.entries.end(), entry) != next.entries.end()) continue;
    if (max_entries > 0 && static_cast<int>(next.entries.size()) >= max_entries) break;
    next.entries.push_back(entry);
  }
  return next;
}

namespace {

// One backend call turned into a record the sink and the result both see.
GenerationRecord run_call(const QuestionItem& q, int call_index, CallPurpose purpose,
                          const std::string& prompt, TextBackend& backend,
                          const EngineConfig& cfg, const ExtractionRule& rule,
                          std::vector<GenerationRecord>& records, const RecordSink& sink) {
  CallContext ctx;
  ctx.question_id = q.id;
  ctx.call_index = call_index;
  ctx.purpose = purpose;
  GenerationOutcome outcome;
  try {
    outcome = backend.generate(ctx, prompt, cfg.params);
  } catch (const BackendError& e) {
    throw BackendError("question " + q.id + ": " + e.what(), e.status);
  } catch (const ProtocolError& e) {
    throw ProtocolError("question " + q.id + ": " + e.what());
  }
  GenerationRecord rec;
  rec.question_id = q.id;
  rec.call_index = call_index;
  rec.purpose = purpose;
  rec.prompt_text = prompt;
  rec.raw_text = outcome.text;
  if (purpose != CallPurpose::contrast) rec.extracted = extract_final_answer(outcome.text, rule);
  rec.latency_ms = outcome.latency_ms;
  rec.retry_count = outcome.retry_count;
  records.push_back(rec);
  if (sink) sink(rec);
  return rec;
}

}  // namespace

SelfConsistencyRun run_self_consistency(const QuestionItem& q, int n, TextBackend& backend,
                                        const EngineConfig& cfg, const RecordSink& sink) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  const auto rule = rule_for(q, cfg.extraction);
  const auto prompt = render_sample(cfg.templates, q.question_text);

  SelfConsistencyRun run;
  run.samples.question_id = q.id;
  run.samples.n = n;
  for (int i = 0; i < n; ++i) {
    auto rec = run_call(q, i, CallPurpose::sample, prompt, backend, cfg, rule, run.records, sink);
    run.samples.answers.push_back(*rec.extracted);
  }
  auto vote_rng = derive_stream(cfg.seed, "vote/" + q.id + "/final");
  auto vote = majority_vote(run.samples.answers, cfg.tie_policy, vote_rng);
  run.samples.final_vote = vote.winner;
  run.tie = vote.tie;
  return run;
}

MirrorRun run_mirror_consistency(const QuestionItem& q, int rounds, TextBackend& backend,
                                 const EngineConfig& cfg, const RecordSink& sink) {
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  const auto rule = rule_for(q, cfg.extraction);

  MirrorRun run;
  run.trace.question_id = q.id;
  run.trace.checklists.push_back(Checklist{});  // C_0

  auto answers_so_far = [&run] {
    std::vector<AnswerKey> keys;
    keys.reserve(run.trace.responses.size());
    for (const auto& r : run.trace.responses) keys.push_back(r.key);
    return keys;
  };

  // Majority over r_0..r_k plus the representative solution text shown to the
  // next contrast call. Abstention keeps the latest raw text as the
  // representative so the contrast prompt always has a solution to show.
  auto vote_round = [&](int k) {
    auto keys = answers_so_far();
    auto vote_rng = derive_stream(cfg.seed, "vote/" + q.id + "/" + std::to_string(k));
    auto vote = majority_vote(keys, cfg.tie_policy, vote_rng);
    MajorityEntry entry;
    if (vote.winner) {
      auto rep_rng = derive_stream(cfg.seed, "rep/" + q.id + "/" + std::to_string(k));
      entry.key = *vote.winner;
      entry.representative_text = representative_text(run.trace.responses, *vote.winner, rep_rng);
    } else {
      entry.key = AnswerKey::unparseable();
      entry.representative_text = run.trace.responses.back().raw_text;
    }
    run.trace.majorities.push_back(std::move(entry));
    return vote;
  };

  // r_0
  auto first = run_call(q, 0, CallPurpose::sample, render_sample(cfg.templates, q.question_text),
                        backend, cfg, rule, run.records, sink);
  run.trace.responses.push_back(ResponseEntry{first.raw_text, *first.extracted});
  run.trace.total_calls = 1;
  auto vote = vote_round(0);

  for (int k = 1; k <= rounds; ++k) {
    const Checklist& prev = run.trace.checklists.back();
    const MajorityEntry& prev_majority = run.trace.majorities.back();

    auto prompt = render_sample_with_feedback(cfg.templates, q.question_text, prev);
    auto rec = run_call(q, 2 * k - 1, CallPurpose::resample_with_feedback, prompt, backend, cfg,
                        rule, run.records, sink);
    run.trace.responses.push_back(ResponseEntry{rec.raw_text, *rec.extracted});
    run.trace.total_calls++;

    bool agree = prev_majority.key.parseable() &&
                 answers_equal(rec.extracted.value(), prev_majority.key);
    if (cfg.skip_contrast_on_agreement && agree) {
      run.trace.contrast_raw.emplace_back();  // placeholder: call was skipped
      run.trace.checklists.push_back(prev);
    } else {
      auto contrast_prompt =
          render_contrast(cfg.templates, q.question_text, prev_majority.representative_text,
                          rec.raw_text, prev);
      auto feedback = run_call(q, 2 * k, CallPurpose::contrast, contrast_prompt, backend, cfg,
                               rule, run.records, sink);
      run.trace.total_calls++;
      run.trace.contrast_raw.push_back(feedback.raw_text);
      auto update = parse_feedback(feedback.raw_text);
      if (update.kind == FeedbackKind::malformed) run.malformed_feedback++;
      run.trace.checklists.push_back(apply_update(prev, update, cfg.max_checklist_entries));
    }
    vote = vote_round(k);
  }

  run.final_answer = vote.winner;
  run.tie = vote.tie;
  return run;
}

}  // namespace mirrorbench

#include "mirrorbench/core.hpp"

#include <array>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace mirrorbench {

namespace {

template <typename E, std::size_t N>
std::string_view lookup(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, s] : table) {
    if (e == v) return s;
  }
  throw std::invalid_argument("enum value out of range");
}

template <typename E, std::size_t N>
E reverse_lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s,
                 std::string_view what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw std::invalid_argument("unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

constexpr std::array<std::pair<TaskKind, std::string_view>, 3> kTaskKinds{{
    {TaskKind::numeric, "numeric"},
    {TaskKind::boolean, "boolean"},
    {TaskKind::multiple_choice, "multiple_choice"},
}};

constexpr std::array<std::pair<AnswerKind, std::string_view>, 4> kAnswerKinds{{
    {AnswerKind::numeric, "numeric"},
    {AnswerKind::boolean, "boolean"},
    {AnswerKind::choice, "choice"},
    {AnswerKind::unparseable, "unparseable"},
}};

constexpr std::array<std::pair<CallPurpose, std::string_view>, 3> kCallPurposes{{
    {CallPurpose::sample, "sample"},
    {CallPurpose::resample_with_feedback, "resample_with_feedback"},
    {CallPurpose::contrast, "contrast"},
}};

constexpr std::array<std::pair<EngineKind, std::string_view>, 3> kEngineKinds{{
    {EngineKind::standard_cot, "standard_cot"},
    {EngineKind::self_consistency, "self_consistency"},
    {EngineKind::mirror_consistency, "mirror_consistency"},
}};

constexpr std::array<std::pair<TiePolicy, std::string_view>, 2> kTiePolicies{{
    {TiePolicy::seeded_random, "seeded_random"},
    {TiePolicy::first_reached, "first_reached"},
}};

constexpr std::array<std::pair<DatasetKind, std::string_view>, 4> kDatasetKinds{{
    {DatasetKind::gsm8k, "gsm8k"},
    {DatasetKind::svamp, "svamp"},
    {DatasetKind::strategyqa, "strategyqa"},
    {DatasetKind::date, "date"},
}};

}  // namespace

std::string_view to_string(TaskKind k) { return lookup(kTaskKinds, k); }
std::string_view to_string(AnswerKind k) { return lookup(kAnswerKinds, k); }
std::string_view to_string(CallPurpose p) { return lookup(kCallPurposes, p); }
std::string_view to_string(EngineKind e) { return lookup(kEngineKinds, e); }
std::string_view to_string(TiePolicy p) { return lookup(kTiePolicies, p); }
std::string_view to_string(DatasetKind d) { return lookup(kDatasetKinds, d); }

TaskKind task_kind_from_string(std::string_view s) {
  return reverse_lookup(kTaskKinds, s, "task kind");
}
AnswerKind answer_kind_from_string(std::string_view s) {
  return reverse_lookup(kAnswerKinds, s, "answer kind");
}
CallPurpose call_purpose_from_string(std::string_view s) {
  return reverse_lookup(kCallPurposes, s, "call purpose");
}
EngineKind engine_kind_from_string(std::string_view s) {
  return reverse_lookup(kEngineKinds, s, "engine kind");
}
TiePolicy tie_policy_from_string(std::string_view s) {
  return reverse_lookup(kTiePolicies, s, "tie policy");
}
DatasetKind dataset_kind_from_string(std::string_view s) {
  return reverse_lookup(kDatasetKinds, s, "dataset kind");
}

std::string canonical_decimal_text(std::string_view s) {
  std::string_view rest = s;
  bool negative = false;
  if (!rest.empty() && (rest.front() == '-' || rest.front() == '+')) {
    negative = rest.front() == '-';
    rest.remove_prefix(1);
  }
  std::string int_part, frac_part;
  bool seen_dot = false, seen_digit = false;
  for (char c : rest) {
    if (c == '.') {
      if (seen_dot) return std::string(s);
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      (seen_dot ? frac_part : int_part) += c;
      seen_digit = true;
    } else {
      return std::string(s);  // not a plain decimal; leave untouched
    }
  }
  if (!seen_digit) return std::string(s);

  std::size_t first = int_part.find_first_not_of('0');
  int_part = first == std::string::npos ? "0" : int_part.substr(first);
  std::size_t last = frac_part.find_last_not_of('0');
  frac_part = last == std::string::npos ? "" : frac_part.substr(0, last + 1);

  std::string out;
  if (negative && !(int_part == "0" && frac_part.empty())) out += '-';
  out += int_part;
  if (!frac_part.empty()) {
    out += '.';
    out += frac_part;
  }
  return out;
}

bool answers_equal(const AnswerKey& a, const AnswerKey& b) {
  if (!a.parseable() || !b.parseable()) return false;
  if (a.kind != b.kind) return false;
  if (a.kind == AnswerKind::numeric) {
    return canonical_decimal_text(a.value) == canonical_decimal_text(b.value);
  }
  return a.value == b.value;
}

json to_json(const AnswerKey& k) {
  json j;
  j["kind"] = to_string(k.kind);
  if (k.parseable()) j["value"] = k.value;
  return j;
}

AnswerKey answer_key_from_json(const json& j) {
  AnswerKey k;
  k.kind = answer_kind_from_string(j.at("kind").get<std::string>());
  if (k.parseable()) k.value = j.at("value").get<std::string>();
  return k;
}

json to_json(const GenerationRecord& r) {
  json j;
  j["schema"] = kGenerationRecordSchema;
  j["question_id"] = r.question_id;
  j["call_index"] = r.call_index;
  j["purpose"] = to_string(r.purpose);
  j["prompt"] = r.prompt_text;
  j["response"] = r.raw_text;
  if (r.extracted) j["extracted"] = to_json(*r.extracted);
  j["latency_ms"] = r.latency_ms;
  j["retry_count"] = r.retry_count;
  return j;
}

GenerationRecord generation_record_from_json(const json& j) {
  if (j.at("schema").get<std::string>() != kGenerationRecordSchema) {
    throw std::invalid_argument("unexpected record schema: " +
                                j.at("schema").get<std::string>());
  }
  GenerationRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.call_index = j.at("call_index").get<int>();
  r.purpose = call_purpose_from_string(j.at("purpose").get<std::string>());
  r.prompt_text = j.at("prompt").get<std::string>();
  r.raw_text = j.at("response").get<std::string>();
  if (j.contains("extracted")) r.extracted = answer_key_from_json(j.at("extracted"));
  r.latency_ms = j.at("latency_ms").get<std::int64_t>();
  r.retry_count = j.at("retry_count").get<int>();
  return r;
}

json to_json(const RunManifest& m) {
  json j;
  j["schema"] = kRunManifestSchema;
  j["dataset"] = {
      {"kind", to_string(m.dataset.kind)},
      {"path", m.dataset.path},
      {"limit", m.dataset.limit},
  };
  j["engine"] = to_string(m.engine);
  j["samples"] = m.samples;
  j["rounds"] = m.rounds;
  j["params"] = {
      {"temperature", m.params.temperature},
      {"max_tokens", m.params.max_tokens},
      {"model", m.params.model},
      {"timeout_s", m.params.timeout_s},
      {"retry",
       {
           {"max_attempts", m.params.retry.max_attempts},
           {"base_delay_ms", m.params.retry.base_delay.count()},
           {"backoff_factor", m.params.retry.backoff_factor},
           {"jitter_frac", m.params.retry.jitter_frac},
       }},
  };
  j["backend"] = {
      {"kind", m.backend.kind},
      {"endpoint", m.backend.endpoint},
      {"api_key_env", m.backend.api_key_env},
      {"script_path", m.backend.script_path},
      {"strict", m.backend.strict},
      {"max_in_flight", m.backend.max_in_flight},
      {"scripted_delay_ms", m.backend.scripted_delay_ms},
  };
  j["seed"] = m.seed;
  j["metrics"] = m.metrics;
  j["tie_policy"] = to_string(m.tie_policy);
  j["bins"] = m.bins;
  j["min_bin_frac"] = m.min_bin_frac;
  j["chat_shape"] = m.chat_shape;
  j["template_overrides"] = m.template_overrides;
  j["extraction"] = {{"answer_marker", m.extraction.answer_marker}};
  j["skip_contrast_on_agreement"] = m.skip_contrast_on_agreement;
  j["max_checklist_entries"] = m.max_checklist_entries;
  j["output_dir"] = m.output_dir;
  j["workers"] = m.workers;
  return j;
}

RunManifest run_manifest_from_json(const json& j) {
  if (j.contains("schema") && j.at("schema").get<std::string>() != kRunManifestSchema) {
    throw std::invalid_argument("unexpected manifest schema: " +
                                j.at("schema").get<std::string>());
  }
  RunManifest m;
  const json& d = j.at("dataset");
  m.dataset.kind = dataset_kind_from_string(d.at("kind").get<std::string>());
  m.dataset.path = d.value("path", std::string{});
  m.dataset.limit = d.value("limit", -1);
  m.engine = engine_kind_from_string(j.at("engine").get<std::string>());
  m.samples = j.value("samples", m.samples);
  m.rounds = j.value("rounds", m.rounds);
  if (j.contains("params")) {
    const json& p = j.at("params");
    m.params.temperature = p.value("temperature", m.params.temperature);
    m.params.max_tokens = p.value("max_tokens", m.params.max_tokens);
    m.params.model = p.value("model", m.params.model);
    m.params.timeout_s = p.value("timeout_s", m.params.timeout_s);
    if (p.contains("retry")) {
      const json& r = p.at("retry");
      m.params.retry.max_attempts = r.value("max_attempts", m.params.retry.max_attempts);
      m.params.retry.base_delay =
          std::chrono::milliseconds(r.value("base_delay_ms", m.params.retry.base_delay.count()));
      m.params.retry.backoff_factor = r.value("backoff_factor", m.params.retry.backoff_factor);
      m.params.retry.jitter_frac = r.value("jitter_frac", m.params.retry.jitter_frac);
    }
  }
  if (j.contains("backend")) {
    const json& b = j.at("backend");
    m.backend.kind = b.value("kind", m.backend.kind);
    m.backend.endpoint = b.value("endpoint", m.backend.endpoint);
    m.backend.api_key_env = b.value("api_key_env", m.backend.api_key_env);
    m.backend.script_path = b.value("script_path", m.backend.script_path);
    m.backend.strict = b.value("strict", m.backend.strict);
    m.backend.max_in_flight = b.value("max_in_flight", m.backend.max_in_flight);
    m.backend.scripted_delay_ms = b.value("scripted_delay_ms", m.backend.scripted_delay_ms);
  }
  m.seed = j.value("seed", m.seed);
  if (j.contains("metrics")) m.metrics = j.at("metrics").get<std::vector<std::string>>();
  if (j.contains("tie_policy")) {
    m.tie_policy = tie_policy_from_string(j.at("tie_policy").get<std::string>());
  }
  m.bins = j.value("bins", m.bins);
  m.min_bin_frac = j.value("min_bin_frac", m.min_bin_frac);
  m.chat_shape = j.value("chat_shape", m.chat_shape);
  if (j.contains("template_overrides")) {
    m.template_overrides =
        j.at("template_overrides").get<std::map<std::string, std::string>>();
  }
  if (j.contains("extraction")) {
    m.extraction.answer_marker = j.at("extraction").value("answer_marker", std::string{});
  }
  m.skip_contrast_on_agreement =
      j.value("skip_contrast_on_agreement", m.skip_contrast_on_agreement);
  m.max_checklist_entries = j.value("max_checklist_entries", m.max_checklist_entries);
  m.output_dir = j.value("output_dir", m.output_dir);
  m.workers = j.value("workers", m.workers);

  if (m.samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (m.rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  if (m.bins < 1) throw std::invalid_argument("bins must be >= 1");
  if (m.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (m.min_bin_frac < 0.0 || m.min_bin_frac > 1.0) {
    throw std::invalid_argument("min_bin_frac must be in [0, 1]");
  }
  if (m.chat_shape != "single_user") {
    throw std::invalid_argument("unsupported chat_shape: " + m.chat_shape);
  }
  return m;
}

RunManifest load_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j = json::parse(in);
  return run_manifest_from_json(j);
}

json manifest_echo_json(const RunManifest& m) {
  json j = to_json(m);
  j.erase("output_dir");
  j.erase("workers");
  return j;
}

}  // namespace mirrorbench

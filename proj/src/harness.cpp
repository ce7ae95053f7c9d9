#include "mirrorbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "mirrorbench/backend.hpp"
#include "mirrorbench/datasets.hpp"
#include "mirrorbench/engines.hpp"
#include "mirrorbench/persistence.hpp"
#include "mirrorbench/rng.hpp"
#include "mirrorbench/voting.hpp"

namespace mirrorbench {

namespace fs = std::filesystem;

RunPaths RunPaths::in(const std::string& dir) {
  RunPaths p;
  p.dir = dir;
  p.manifest = (fs::path(dir) / "manifest.json").string();
  p.records = (fs::path(dir) / "records.jsonl").string();
  p.results = (fs::path(dir) / "results.jsonl").string();
  p.summary = (fs::path(dir) / "summary.json").string();
  return p;
}

std::string RunPaths::accuracy_csv() const { return (fs::path(dir) / "accuracy.csv").string(); }
std::string RunPaths::ece_csv() const { return (fs::path(dir) / "ece.csv").string(); }
std::string RunPaths::reliability_csv(const std::string& metric) const {
  return (fs::path(dir) / ("reliability_" + metric + ".csv")).string();
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

std::vector<std::pair<std::string, double>> question_confidences(
    std::span<const AnswerKey> answers, const std::optional<AnswerKey>& final_vote,
    const std::vector<std::string>& metrics) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(metrics.size());
  if (!final_vote) {
    // Abstention: nothing parsed, so every sample-based confidence is zero.
    for (const auto& m : metrics) out.emplace_back(m, 0.0);
    return out;
  }
  auto hist = AnswerHistogram::build(answers, *final_vote);
  for (const auto& m : metrics) out.emplace_back(m, metric_by_name(m, *hist));
  return out;
}

// Work a single question owes the committer: its records (possibly partial)
// and, when it completed, one question_result row.
struct QuestionWork {
  std::vector<GenerationRecord> records;
  std::optional<json> row;
  std::string error;
};

json result_row(const RunManifest& manifest, const QuestionItem& q,
                std::span<const AnswerKey> answers, const std::optional<AnswerKey>& final_vote,
                bool tie, const std::vector<GenerationRecord>& records, int malformed_feedback,
                const std::vector<Checklist>* checklists,
                const std::vector<MajorityEntry>* majorities) {
  long long retries = 0;
  for (const auto& r : records) retries += r.retry_count;
  const bool correct = final_vote && answers_equal(*final_vote, q.gold);

  json row;
  row["schema"] = std::string(kQuestionResultSchema);
  row["question_id"] = q.id;
  row["engine"] = std::string(to_string(manifest.engine));
  row["gold"] = to_json(q.gold);
  row["final"] = final_vote ? to_json(*final_vote) : json(nullptr);
  row["correct"] = correct;
  row["abstained"] = !final_vote.has_value();
  row["tie"] = tie;
  json arr = json::array();
  for (const auto& k : answers) arr.push_back(to_json(k));
  row["answers"] = std::move(arr);
  json conf = json::object();
  for (const auto& [name, value] : question_confidences(answers, final_vote, manifest.metrics)) {
    conf[name] = value;
  }
  row["confidences"] = std::move(conf);
  row["total_calls"] = records.size();
  row["retries"] = retries;
  row["malformed_feedback"] = malformed_feedback;
  if (checklists != nullptr) {
    json cl = json::array();
    for (const auto& c : *checklists) {
      json one;
      one["entries"] = c.entries;
      one["revision"] = c.revision;
      cl.push_back(std::move(one));
    }
    row["checklists"] = std::move(cl);
  }
  if (majorities != nullptr) {
    json mj = json::array();
    for (const auto& m : *majorities) mj.push_back(to_json(m.key));
    row["majorities"] = std::move(mj);
  }
  return row;
}

QuestionWork run_question(const QuestionItem& q, const RunManifest& manifest,
                          const EngineConfig& cfg, TextBackend& backend) {
  QuestionWork work;
  RecordSink sink = [&work](const GenerationRecord& r) { work.records.push_back(r); };
  try {
    if (manifest.engine == EngineKind::mirror_consistency) {
      auto run = run_mirror_consistency(q, manifest.rounds, backend, cfg, sink);
      std::vector<AnswerKey> answers;
      answers.reserve(run.trace.responses.size());
      for (const auto& r : run.trace.responses) answers.push_back(r.key);
      work.row = result_row(manifest, q, answers, run.final_answer, run.tie, work.records,
                            run.malformed_feedback, &run.trace.checklists,
                            &run.trace.majorities);
    } else {
      // standard_cot is self-consistency with a single sample.
      int n = manifest.engine == EngineKind::standard_cot ? 1 : manifest.samples;
      auto run = run_self_consistency(q, n, backend, cfg, sink);
      work.row = result_row(manifest, q, run.samples.answers, run.samples.final_vote, run.tie,
                            work.records, 0, nullptr, nullptr);
    }
  } catch (const std::exception& e) {
    work.error = e.what();
  }
  return work;
}

EngineConfig config_from(const RunManifest& manifest) {
  EngineConfig cfg;
  cfg.templates = manifest.template_overrides.empty() ? TemplateSet::defaults()
                                                      : load_templates(manifest.template_overrides);
  cfg.params = manifest.params;
  cfg.extraction = manifest.extraction;
  cfg.tie_policy = manifest.tie_policy;
  cfg.seed = manifest.seed;
  cfg.skip_contrast_on_agreement = manifest.skip_contrast_on_agreement;
  cfg.max_checklist_entries = manifest.max_checklist_entries;
  return cfg;
}

void require_known_metrics(const RunManifest& manifest) {
  for (const auto& name : manifest.metrics) {
    if (!is_known_metric(name)) throw std::invalid_argument("unknown metric: " + name);
  }
  if (manifest.metrics.empty()) throw std::invalid_argument("manifest requests no metrics");
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace

RunSummary run_experiment(const RunManifest& manifest, bool resume) {
  if (manifest.output_dir.empty()) {
    throw std::invalid_argument("manifest needs an output_dir to run");
  }
  require_known_metrics(manifest);
  const auto paths = RunPaths::in(manifest.output_dir);
  const json echo = manifest_echo_json(manifest);

  // Validate everything that can fail before touching the output dir, so a
  // bad manifest does not leave a half-created run behind.
  const auto items = load_questions(manifest.dataset);
  const EngineConfig cfg = config_from(manifest);
  auto backend = make_backend(manifest.backend);

  std::unordered_set<std::string> done;
  if (fs::exists(paths.dir)) {
    if (!resume) {
      throw std::runtime_error("output dir already exists (resume to continue it): " + paths.dir);
    }
    std::ifstream in(paths.manifest);
    if (!in) throw std::runtime_error("resume: missing " + paths.manifest);
    json stored = json::parse(in);
    if (stored != echo) {
      throw std::runtime_error("resume: manifest does not match the one stored in " + paths.dir);
    }
    // Completed questions are the ones with a verified result row; everything
    // else (torn tails, partial record sets) is compacted away and re-run.
    if (fs::exists(paths.results)) {
      for (const auto& body : scan_records(paths.results).bodies) {
        if (body.value("schema", "") == kQuestionResultSchema) {
          done.insert(body.at("question_id").get<std::string>());
        }
      }
      compact_records(paths.results, [&done](const json& body) {
        return done.count(body.at("question_id").get<std::string>()) > 0;
      });
    }
    if (fs::exists(paths.records)) {
      compact_records(paths.records, [&done](const json& body) {
        return done.count(body.at("question_id").get<std::string>()) > 0;
      });
    }
  } else {
    fs::create_directories(paths.dir);
    write_text_file(paths.manifest, echo.dump(2) + "\n");
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (done.count(items[i].id) == 0) pending.push_back(i);
  }

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, QuestionWork> finished;
  std::atomic<std::size_t> next_slot{0};

  int worker_count = std::max(1, manifest.workers);
  worker_count = std::min<int>(worker_count, static_cast<int>(pending.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < worker_count; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t slot = next_slot.fetch_add(1);
        if (slot >= pending.size()) break;
        std::size_t idx = pending[slot];
        auto work = run_question(items[idx], manifest, cfg, *backend);
        {
          std::lock_guard<std::mutex> lock(mu);
          finished.emplace(idx, std::move(work));
        }
        cv.notify_all();
      }
    });
  }

  // Single committer: questions hit the files strictly in dataset order, so
  // the record files do not depend on worker scheduling.
  {
    RecordWriter record_writer(paths.records, /*append=*/true);
    RecordWriter result_writer(paths.results, /*append=*/true);
    for (std::size_t slot = 0; slot < pending.size(); ++slot) {
      const std::size_t idx = pending[slot];
      QuestionWork work;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return finished.count(idx) > 0; });
        work = std::move(finished.at(idx));
        finished.erase(idx);
      }
      for (const auto& r : work.records) record_writer.append(to_json(r));
      if (work.row) {
        result_writer.append(*work.row);
      } else {
        std::fprintf(stderr, "[incomplete] %s: %s\n", items[idx].id.c_str(), work.error.c_str());
      }
    }
  }
  for (auto& t : pool) t.join();

  return write_report(paths.dir);
}

RunSummary write_report(const std::string& run_dir) {
  const auto paths = RunPaths::in(run_dir);
  std::ifstream manifest_in(paths.manifest);
  if (!manifest_in) throw std::runtime_error("no manifest.json in " + run_dir);
  const json manifest_echo = json::parse(manifest_in);
  const RunManifest manifest = run_manifest_from_json(manifest_echo);
  require_known_metrics(manifest);

  const auto items = load_questions(manifest.dataset);
  std::unordered_map<std::string, const QuestionItem*> item_by_id;
  for (const auto& q : items) item_by_id.emplace(q.id, &q);

  std::unordered_map<std::string, std::vector<GenerationRecord>> records_by_id;
  for (const auto& body : scan_records(paths.records).bodies) {
    auto rec = generation_record_from_json(body);
    records_by_id[rec.question_id].push_back(std::move(rec));
  }

  RunSummary summary;
  summary.engine = manifest.engine;
  summary.dataset = manifest.dataset.kind;
  summary.questions = static_cast<int>(items.size());

  std::unordered_set<std::string> completed_ids;
  std::map<std::string, std::vector<CalibrationPoint>> points;
  for (const auto& m : manifest.metrics) points[m];

  for (const auto& row : scan_records(paths.results).bodies) {
    if (row.value("schema", "") != kQuestionResultSchema) {
      throw std::runtime_error("unexpected row schema in " + paths.results);
    }
    const auto qid = row.at("question_id").get<std::string>();
    auto item_it = item_by_id.find(qid);
    if (item_it == item_by_id.end()) {
      throw std::runtime_error("result row for unknown question " + qid);
    }
    const QuestionItem& q = *item_it->second;
    auto rec_it = records_by_id.find(qid);
    if (rec_it == records_by_id.end()) {
      throw std::runtime_error("no records for completed question " + qid);
    }
    auto& recs = rec_it->second;
    std::sort(recs.begin(), recs.end(),
              [](const GenerationRecord& a, const GenerationRecord& b) {
                return a.call_index < b.call_index;
              });

    // Answers come from the raw records; the stored row is only allowed to
    // agree with them.
    std::vector<AnswerKey> answers;
    for (const auto& r : recs) {
      if (r.purpose == CallPurpose::contrast) continue;
      if (!r.extracted) throw std::runtime_error("record missing extraction for " + qid);
      answers.push_back(*r.extracted);
    }
    std::size_t expected = manifest.engine == EngineKind::mirror_consistency
                               ? static_cast<std::size_t>(manifest.rounds) + 1
                           : manifest.engine == EngineKind::standard_cot
                               ? 1
                               : static_cast<std::size_t>(manifest.samples);
    if (answers.size() != expected) {
      throw std::runtime_error("question " + qid + " has " + std::to_string(answers.size()) +
                               " answers, expected " + std::to_string(expected));
    }

    const std::string vote_label =
        manifest.engine == EngineKind::mirror_consistency
            ? "vote/" + qid + "/" + std::to_string(manifest.rounds)
            : "vote/" + qid + "/final";
    auto vote_rng = derive_stream(manifest.seed, vote_label);
    const auto vote = majority_vote(answers, manifest.tie_policy, vote_rng);
    const bool correct = vote.winner && answers_equal(*vote.winner, q.gold);

    // Cross-checks: stored row vs. recomputation from raw records.
    auto mismatch = [&qid](const std::string& what) {
      throw std::runtime_error("stored row disagrees with records for " + qid + ": " + what);
    };
    if (answer_key_from_json(row.at("gold")) != q.gold) mismatch("gold");
    if (row.at("final").is_null() != !vote.winner) mismatch("abstention");
    if (vote.winner && answer_key_from_json(row.at("final")) != *vote.winner) mismatch("final");
    if (row.at("correct").get<bool>() != correct) mismatch("correct");
    if (row.at("tie").get<bool>() != vote.tie) mismatch("tie");
    const auto& stored_answers = row.at("answers");
    if (stored_answers.size() != answers.size()) mismatch("answer count");
    for (std::size_t i = 0; i < answers.size(); ++i) {
      if (answer_key_from_json(stored_answers.at(i)) != answers[i]) mismatch("answers");
    }
    const auto confidences = question_confidences(answers, vote.winner, manifest.metrics);
    const auto& stored_conf = row.at("confidences");
    for (const auto& [name, value] : confidences) {
      if (!stored_conf.contains(name) || stored_conf.at(name).get<double>() != value) {
        mismatch("confidence " + name);
      }
    }

    completed_ids.insert(qid);
    summary.completed += 1;
    summary.correct += correct ? 1 : 0;
    summary.abstained += vote.winner ? 0 : 1;
    summary.tie_decided += vote.tie ? 1 : 0;
    summary.total_calls += row.at("total_calls").get<long long>();
    summary.total_retries += row.at("retries").get<long long>();
    summary.malformed_feedback += row.at("malformed_feedback").get<int>();
    for (const auto& [name, value] : confidences) {
      points[name].push_back(CalibrationPoint{qid, value, correct});
    }
  }

  if (summary.completed == 0) {
    throw std::runtime_error("no completed questions to report in " + run_dir);
  }
  summary.accuracy = static_cast<double>(summary.correct) / summary.completed;
  for (const auto& q : items) {
    if (completed_ids.count(q.id) == 0) summary.incomplete_questions.push_back(q.id);
  }

  for (const auto& name : manifest.metrics) {
    summary.ece.emplace_back(name, ece(points.at(name), manifest.bins));
    summary.reliability[name] =
        reliability_bins(points.at(name), manifest.bins, manifest.min_bin_frac);
  }

  // summary.json
  json out;
  out["schema"] = "run_summary/1";
  out["engine"] = std::string(to_string(summary.engine));
  out["dataset"] = std::string(to_string(summary.dataset));
  out["questions"] = summary.questions;
  out["completed"] = summary.completed;
  out["correct"] = summary.correct;
  out["accuracy"] = summary.accuracy;
  out["abstained"] = summary.abstained;
  out["tie_decided"] = summary.tie_decided;
  out["total_calls"] = summary.total_calls;
  out["total_retries"] = summary.total_retries;
  out["malformed_feedback"] = summary.malformed_feedback;
  json ece_json = json::object();
  for (const auto& [name, value] : summary.ece) ece_json[name] = value;
  out["ece"] = std::move(ece_json);
  out["incomplete_questions"] = summary.incomplete_questions;
  out["manifest"] = manifest_echo;
  write_text_file(paths.summary, out.dump(2) + "\n");

  // accuracy.csv
  {
    std::string csv = "engine,dataset,questions,completed,correct,accuracy,abstained,tie_decided\n";
    csv += std::string(to_string(summary.engine)) + "," + std::string(to_string(summary.dataset)) +
           "," + std::to_string(summary.questions) + "," + std::to_string(summary.completed) +
           "," + std::to_string(summary.correct) + "," + fmt_double(summary.accuracy) + "," +
           std::to_string(summary.abstained) + "," + std::to_string(summary.tie_decided) + "\n";
    write_text_file(paths.accuracy_csv(), csv);
  }

  // ece.csv: one column per requested metric, manifest order.
  {
    std::string csv = "engine,dataset";
    for (const auto& kv : summary.ece) csv += "," + kv.first;
    csv += "\n";
    csv += std::string(to_string(summary.engine)) + "," + std::string(to_string(summary.dataset));
    for (const auto& kv : summary.ece) csv += "," + fmt_double(kv.second);
    csv += "\n";
    write_text_file(paths.ece_csv(), csv);
  }

  // reliability_<metric>.csv
  for (const auto& [name, bins] : summary.reliability) {
    std::string csv = "bin,lo,hi,mean_confidence,accuracy,size,omitted,size_hint\n";
    for (const auto& b : bins) {
      csv += std::to_string(b.bin) + "," + fmt_double(b.lo) + "," + fmt_double(b.hi) + "," +
             fmt_double(b.mean_conf) + "," + fmt_double(b.accuracy) + "," +
             std::to_string(b.size) + "," + (b.omitted ? "1" : "0") + "," +
             fmt_double(b.size_hint) + "\n";
    }
    write_text_file(paths.reliability_csv(name), csv);
  }

  return summary;
}

std::size_t freeze_script(const std::string& run_dir, const std::string& script_path) {
  const auto paths = RunPaths::in(run_dir);
  ScriptBook book;
  for (const auto& body : scan_records(paths.records).bodies) {
    auto rec = generation_record_from_json(body);
    book.add(rec.question_id, rec.call_index, rec.raw_text);
  }
  book.save(script_path);
  return book.size();
}

}  // namespace mirrorbench

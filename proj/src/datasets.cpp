#include "mirrorbench/datasets.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mirrorbench/extraction.hpp"

namespace mirrorbench {

namespace {

std::string item_id(std::string_view kind, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%04zu", std::string(kind).c_str(), index);
  return buf;
}

[[noreturn]] void fail(std::string_view dataset, std::size_t index, const std::string& what) {
  throw std::runtime_error(std::string(dataset) + " record " + std::to_string(index) + ": " +
                           what);
}

std::ifstream open_or_throw(const std::string& path, std::string_view dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string(dataset) + ": cannot open " + path);
  return in;
}

json parse_or_throw(std::ifstream& in, const std::string& path, std::string_view dataset) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(dataset) + ": parse error in " + path + ": " +
                             e.what());
  }
}

// BIG-bench task files carry {"examples": [{"input", "target_scores"}, ...]}
const json& bigbench_examples(const json& root, std::string_view dataset) {
  if (!root.contains("examples") || !root.at("examples").is_array()) {
    throw std::runtime_error(std::string(dataset) + ": task file lacks an examples array");
  }
  return root.at("examples");
}

}  // namespace

std::vector<QuestionItem> load_gsm8k(const std::string& path, int limit) {
  std::ifstream in = open_or_throw(path, "gsm8k");
  std::vector<QuestionItem> items;
  std::string line;
  std::size_t index = 0;
  while ((limit < 0 || static_cast<int>(items.size()) < limit) && std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail("gsm8k", index, std::string("bad json line: ") + e.what());
    }
    if (!j.contains("question") || !j.contains("answer")) {
      fail("gsm8k", index, "missing question/answer field");
    }
    std::string answer = j.at("answer").get<std::string>();
    std::size_t marker = answer.rfind("####");
    if (marker == std::string::npos) fail("gsm8k", index, "answer has no #### marker");
    std::string surface = answer.substr(marker + 4);
    auto canon = normalize_numeric(surface);
    if (!canon) fail("gsm8k", index, "non-numeric value after ####: '" + surface + "'");

    QuestionItem item;
    item.id = item_id("gsm8k", index);
    item.task_kind = TaskKind::numeric;
    item.question_text = j.at("question").get<std::string>();
    item.gold = AnswerKey::numeric(*canon);
    while (!surface.empty() && std::isspace(static_cast<unsigned char>(surface.front()))) {
      surface.erase(surface.begin());
    }
    while (!surface.empty() && std::isspace(static_cast<unsigned char>(surface.back()))) {
      surface.pop_back();
    }
    item.gold_surface = surface;
    items.push_back(std::move(item));
    ++index;
  }
  return items;
}

std::vector<QuestionItem> load_svamp(const std::string& path, int limit) {
  std::ifstream in = open_or_throw(path, "svamp");
  json root = parse_or_throw(in, path, "svamp");
  if (!root.is_array()) throw std::runtime_error("svamp: expected a top-level array");

  std::vector<QuestionItem> items;
  for (std::size_t index = 0; index < root.size(); ++index) {
    if (limit >= 0 && static_cast<int>(items.size()) >= limit) break;
    const json& j = root[index];
    for (const char* field : {"Body", "Question", "Answer"}) {
      if (!j.contains(field)) fail("svamp", index, std::string("missing field ") + field);
    }
    if (!j.at("Answer").is_number()) fail("svamp", index, "Answer is not numeric");

    std::string surface = j.at("Answer").dump();
    auto canon = normalize_numeric(surface);
    if (!canon) fail("svamp", index, "Answer does not normalize: '" + surface + "'");

    QuestionItem item;
    item.id = item_id("svamp", index);
    item.task_kind = TaskKind::numeric;
    item.question_text =
        j.at("Body").get<std::string>() + " " + j.at("Question").get<std::string>();
    item.gold = AnswerKey::numeric(*canon);
    item.gold_surface = surface;
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<QuestionItem> load_strategyqa(const std::string& path, int limit) {
  std::ifstream in = open_or_throw(path, "strategyqa");
  json root = parse_or_throw(in, path, "strategyqa");
  const json& examples = bigbench_examples(root, "strategyqa");

  std::vector<QuestionItem> items;
  for (std::size_t index = 0; index < examples.size(); ++index) {
    if (limit >= 0 && static_cast<int>(items.size()) >= limit) break;
    const json& j = examples[index];
    if (!j.contains("input") || !j.contains("target_scores")) {
      fail("strategyqa", index, "missing input/target_scores");
    }
    const json& scores = j.at("target_scores");
    if (!scores.contains("Yes") || !scores.contains("No") || scores.size() != 2) {
      fail("strategyqa", index, "target_scores must be exactly {Yes, No}");
    }
    double yes = scores.at("Yes").get<double>();
    double no = scores.at("No").get<double>();
    if ((yes == 1.0) == (no == 1.0)) {
      fail("strategyqa", index, "exactly one of Yes/No must be scored 1");
    }

    QuestionItem item;
    item.id = item_id("strategyqa", index);
    item.task_kind = TaskKind::boolean;
    item.question_text = j.at("input").get<std::string>();
    item.gold = AnswerKey::boolean(yes == 1.0);
    item.gold_surface = yes == 1.0 ? "Yes" : "No";
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<QuestionItem> load_date(const std::string& path, int limit) {
  std::ifstream in = open_or_throw(path, "date");
  json root = parse_or_throw(in, path, "date");
  const json& examples = bigbench_examples(root, "date");

  std::vector<QuestionItem> items;
  for (std::size_t index = 0; index < examples.size(); ++index) {
    if (limit >= 0 && static_cast<int>(items.size()) >= limit) break;
    const json& j = examples[index];
    if (!j.contains("input") || !j.contains("target_scores")) {
      fail("date", index, "missing input/target_scores");
    }
    const json& scores = j.at("target_scores");
    if (scores.empty()) fail("date", index, "empty target_scores");
    if (scores.size() > 26) fail("date", index, "more options than letters");

    // options keep file order; exactly one must be scored 1
    QuestionItem item;
    item.id = item_id("date", index);
    item.task_kind = TaskKind::multiple_choice;
    int correct = -1;
    int i = 0;
    for (const auto& [text, score] : scores.items()) {
      item.options.push_back(text);
      if (score.get<double>() == 1.0) {
        if (correct >= 0) fail("date", index, "two options scored 1");
        correct = i;
      }
      ++i;
    }
    if (correct < 0) fail("date", index, "no option scored 1");

    item.question_text = j.at("input").get<std::string>() + "\nOptions:";
    for (std::size_t o = 0; o < item.options.size(); ++o) {
      item.question_text += "\n(" + std::string(1, static_cast<char>('A' + o)) + ") " +
                            item.options[o];
    }
    item.gold = AnswerKey::choice(static_cast<char>('A' + correct));
    item.gold_surface = item.options[static_cast<std::size_t>(correct)];
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<QuestionItem> load_questions(const DatasetDesc& desc) {
  switch (desc.kind) {
    case DatasetKind::gsm8k:
      return load_gsm8k(desc.path, desc.limit < 0 ? 768 : desc.limit);
    case DatasetKind::svamp:
      return load_svamp(desc.path, desc.limit < 0 ? 768 : desc.limit);
    case DatasetKind::strategyqa:
      return load_strategyqa(desc.path, desc.limit < 0 ? 490 : desc.limit);
    case DatasetKind::date:
      return load_date(desc.path, desc.limit);
  }
  throw std::invalid_argument("unknown dataset kind");
}

}  // namespace mirrorbench

#include "mirrorbench/prompts.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mirrorbench {

namespace {

// The "\n\n" inside the sample templates is the two literal characters
// backslash-n, spelled out to the model as part of its formatting instruction.
constexpr std::string_view kSampleDefault =
    R"(Solve the following problem step by step. Begin each step with "Step :" and ensure each step is separated by "\n\n". Conclude with the phrase "So the answer is", followed by the answer.

Question: {QUESTION}

Answer:)";

constexpr std::string_view kSampleWithFeedbackDefault =
    R"(Solve the following problem step by step. Begin each step with "Step :" and ensure each step is separated by "\n\n". Conclude with the phrase "So the answer is", followed by the answer.

Consider integrating the previous advice: {CHECKLIST}, into your solution process.

Question: {QUESTION}

Answer:)";

constexpr std::string_view kContrastDefault =
    R"(Given two candidate solutions for a question, carefully analyze and compare the differences in their reasoning steps. Consider: 1) The specific differences in their reasoning steps and final answers; 2) The reasons behind these disparities.

Question: {QUESTION}

Two solutions:
Solution 1: {PRE-MAJORITY-VOTE}
Solution 2: {CUR-RESPONSE}

If no differences exist, output <STOP!>.
If differences are identified, describe them, determine errors, and explain why. Extract a key suggestion to prevent such errors and combine it with the previous checklist {PRE-CHECKLIST} to formulate a new checklist. Begin the checklist with <CHECKING>.

Feedback:)";

bool token_char(char c) { return (c >= 'A' && c <= 'Z') || c == '-'; }

// Finds the next placeholder token starting at or after `from`; returns the
// position of '{' and fills `token`, or npos.
std::size_t next_token(std::string_view text, std::size_t from, std::string& token) {
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || text[j] < 'A' || text[j] > 'Z') continue;
    while (j < text.size() && token_char(text[j])) ++j;
    if (j < text.size() && text[j] == '}') {
      token.assign(text.substr(i + 1, j - i - 1));
      return i;
    }
  }
  return std::string_view::npos;
}

std::set<std::string> token_set(std::string_view text) {
  std::set<std::string> out;
  std::string token;
  std::size_t pos = 0;
  while ((pos = next_token(text, pos, token)) != std::string_view::npos) {
    out.insert(token);
    pos += token.size() + 2;
  }
  return out;
}

void check_tokens(std::string_view name, std::string_view text,
                  const std::set<std::string>& declared) {
  if (token_set(text) != declared) {
    std::string want;
    for (const std::string& t : declared) want += "{" + t + "} ";
    throw std::invalid_argument("template '" + std::string(name) +
                                "' must contain exactly these placeholders: " + want);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open template file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TemplateSet TemplateSet::defaults() {
  return {
      .sample = std::string(kSampleDefault),
      .sample_with_feedback = std::string(kSampleWithFeedbackDefault),
      .contrast = std::string(kContrastDefault),
  };
}

void TemplateSet::validate() const {
  check_tokens("sample", sample, {"QUESTION"});
  check_tokens("sample_with_feedback", sample_with_feedback, {"QUESTION", "CHECKLIST"});
  check_tokens("contrast", contrast,
               {"QUESTION", "PRE-MAJORITY-VOTE", "CUR-RESPONSE", "PRE-CHECKLIST"});
}

TemplateSet load_templates(const std::map<std::string, std::string>& overrides) {
  TemplateSet t = TemplateSet::defaults();
  for (const auto& [name, path] : overrides) {
    if (name == "sample") {
      t.sample = read_file(path);
    } else if (name == "sample_with_feedback") {
      t.sample_with_feedback = read_file(path);
    } else if (name == "contrast") {
      t.contrast = read_file(path);
    } else {
      throw std::invalid_argument("unknown template override: '" + name + "'");
    }
  }
  t.validate();
  return t;
}

std::string substitute_placeholders(std::string_view tmpl,
                                    const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::string token;
  std::size_t pos = 0;
  for (;;) {
    std::size_t at = next_token(tmpl, pos, token);
    if (at == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      return out;
    }
    out.append(tmpl.substr(pos, at - pos));
    auto it = values.find(token);
    if (it == values.end()) {
      throw std::invalid_argument("unresolved placeholder {" + token + "}");
    }
    out.append(it->second);
    pos = at + token.size() + 2;
  }
}

std::string render_checklist_lines(const Checklist& c) {
  std::string out;
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    if (i != 0) out += '\n';
    out += std::to_string(i + 1) + ". " + c.entries[i];
  }
  return out;
}

std::string render_sample(const TemplateSet& t, std::string_view question_text) {
  if (question_text.empty()) throw std::invalid_argument("question_text must be non-empty");
  return substitute_placeholders(t.sample, {{"QUESTION", std::string(question_text)}});
}

std::string render_sample_with_feedback(const TemplateSet& t, std::string_view question_text,
                                        const Checklist& checklist) {
  if (checklist.empty()) return render_sample(t, question_text);
  if (question_text.empty()) throw std::invalid_argument("question_text must be non-empty");
  return substitute_placeholders(t.sample_with_feedback,
                                 {{"QUESTION", std::string(question_text)},
                                  {"CHECKLIST", render_checklist_lines(checklist)}});
}

std::string render_contrast(const TemplateSet& t, std::string_view question_text,
                            std::string_view majority_text, std::string_view current_text,
                            const Checklist& prev_checklist) {
  if (question_text.empty()) throw std::invalid_argument("question_text must be non-empty");
  if (majority_text.empty() || current_text.empty()) {
    throw std::invalid_argument("contrast needs two non-empty solution texts");
  }
  std::string prev =
      prev_checklist.empty() ? "(empty)" : render_checklist_lines(prev_checklist);
  return substitute_placeholders(t.contrast,
                                 {{"QUESTION", std::string(question_text)},
                                  {"PRE-MAJORITY-VOTE", std::string(majority_text)},
                                  {"CUR-RESPONSE", std::string(current_text)},
                                  {"PRE-CHECKLIST", prev}});
}

}  // namespace mirrorbench

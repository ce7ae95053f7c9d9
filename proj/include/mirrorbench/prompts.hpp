#pragma once

#include <map>
#include <string>
#include <string_view>

#include "mirrorbench/core.hpp"

namespace mirrorbench {

/// The three prompt templates. Placeholders are written {LIKE-THIS}; a
/// placeholder token is '{', an uppercase letter, then uppercase letters or
/// '-', then '}'. Anything else containing braces is ordinary text.
struct TemplateSet {
  std::string sample;                // placeholders: QUESTION
  std::string sample_with_feedback;  // QUESTION, CHECKLIST
  std::string contrast;              // QUESTION, PRE-MAJORITY-VOTE, CUR-RESPONSE, PRE-CHECKLIST

  static TemplateSet defaults();

  /// Each template must contain exactly its declared placeholder set, each
  /// token at least once. Throws std::invalid_argument otherwise.
  void validate() const;
};

/// Defaults plus per-template file overrides (keys: "sample",
/// "sample_with_feedback", "contrast"; values: file paths). File bytes are
/// taken verbatim. Unknown keys and invalid results throw.
TemplateSet load_templates(const std::map<std::string, std::string>& overrides);

/// Single-pass substitution. Values are inserted verbatim and never rescanned,
/// so a value containing "{QUESTION}" does not recurse. A token with no value
/// throws std::invalid_argument.
std::string substitute_placeholders(std::string_view tmpl,
                                    const std::map<std::string, std::string>& values);

/// Checklist surface form used inside prompts: numbered lines "1. ...",
/// newline-joined.
std::string render_checklist_lines(const Checklist& c);

std::string render_sample(const TemplateSet& t, std::string_view question_text);

/// Empty checklist falls back to render_sample, byte for byte.
std::string render_sample_with_feedback(const TemplateSet& t, std::string_view question_text,
                                        const Checklist& checklist);

/// prev_checklist renders as "(empty)" when it has no entries.
std::string render_contrast(const TemplateSet& t, std::string_view question_text,
                            std::string_view majority_text, std::string_view current_text,
                            const Checklist& prev_checklist);

}  // namespace mirrorbench

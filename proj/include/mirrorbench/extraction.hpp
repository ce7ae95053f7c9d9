#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mirrorbench/core.hpp"

namespace mirrorbench {

inline constexpr std::string_view kDefaultAnswerMarker = "So the answer is";

/// How to turn a raw completion into an AnswerKey. All functions here are
/// pure; unparseable is a value, never an error.
struct ExtractionRule {
  std::string marker = std::string(kDefaultAnswerMarker);
  TaskKind task_kind = TaskKind::numeric;
  std::vector<std::string> options;  // multiple_choice only
};

ExtractionRule rule_for(const QuestionItem& item, const ExtractionOverrides& overrides = {});

/// Takes the tail after the LAST case-insensitive marker occurrence (cut at
/// the first newline) and normalizes it for the rule's task kind.
AnswerKey extract_final_answer(std::string_view raw_text, const ExtractionRule& rule);

/// Canonical decimal string, or nullopt. Handles surrounding punctuation,
/// currency symbols, thousands commas, a trailing %, and terminating
/// fractions "a/b". Canonical form has no leading zeros, no trailing fraction
/// zeros, and no "-0".
std::optional<std::string> normalize_numeric(std::string_view tail);

/// {yes,true} / {no,false}, case-insensitive.
std::optional<bool> normalize_boolean(std::string_view tail);

/// Option letter "(B)" / "B" within range, or verbatim option text. Returns
/// the uppercase letter label.
std::optional<char> normalize_choice(std::string_view tail, std::span<const std::string> options);

}  // namespace mirrorbench

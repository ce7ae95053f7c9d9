#pragma once

#include <string>
#include <vector>

#include "mirrorbench/core.hpp"

namespace mirrorbench {

// Loaders for the four benchmark file layouts. All are order-preserving
// ("first N in file order" split policy) and fail loudly with the dataset
// name and record index on malformed input. Item ids are "<kind>-<index>"
// with a zero-padded 4-digit index.

/// Line-delimited records with "question" and "answer" fields; gold is the
/// numeric value after the final "#### " marker of the answer.
std::vector<QuestionItem> load_gsm8k(const std::string& path, int limit = 768);

/// Array of records with "Body", "Question", "Answer" fields;
/// question_text = Body + " " + Question, gold = numeric Answer.
std::vector<QuestionItem> load_svamp(const std::string& path, int limit = 768);

/// BIG-bench task layout; each example's target_scores has exactly "Yes" and
/// "No" with one of them scored 1.
std::vector<QuestionItem> load_strategyqa(const std::string& path, int limit = 490);

/// BIG-bench task layout with one option scored 1 among several; options are
/// lettered in file order and appended to the question text. The full split
/// loads by default (limit -1).
std::vector<QuestionItem> load_date(const std::string& path, int limit = -1);

/// Dispatch on desc.kind; desc.limit -1 means each loader's default.
std::vector<QuestionItem> load_questions(const DatasetDesc& desc);

}  // namespace mirrorbench

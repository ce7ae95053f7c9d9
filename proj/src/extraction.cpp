#include "mirrorbench/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>

namespace mirrorbench {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_trailing_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case ')': case '"': case '\'': case '*':
      return true;
    default:
      return false;
  }
}

// the leading set excludes '.' and ',' so ".5" keeps its decimal point
bool is_leading_punct(char c) {
  switch (c) {
    case '(': case '"': case '\'': case '*': case ':':
      return true;
    default:
      return false;
  }
}

std::string_view strip_edge_punct(std::string_view s) {
  for (;;) {
    std::string_view before = s;
    s = trim(s);
    while (!s.empty() && is_trailing_punct(s.back())) s.remove_suffix(1);
    while (!s.empty() && is_leading_punct(s.front())) s.remove_prefix(1);
    if (s == before) return s;
  }
}

// UTF-8 aware only to the extent the common currency marks need: $ plus the
// multi-byte €, £, ¥.
bool strip_currency_prefix(std::string_view& s) {
  static constexpr std::string_view marks[] = {"$", "€", "£", "¥"};
  for (std::string_view m : marks) {
    if (s.starts_with(m)) {
      s.remove_prefix(m.size());
      return true;
    }
  }
  return false;
}

std::string canonical_decimal(bool negative, std::string int_part, std::string frac_part) {
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

std::optional<std::string> parse_plain_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  std::string int_part, frac_part;
  bool seen_dot = false, seen_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      (seen_dot ? frac_part : int_part) += c;
      seen_digit = true;
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  return canonical_decimal(negative, std::move(int_part), std::move(frac_part));
}

// Exact decimal for a/b via long division; nullopt when the expansion does
// not terminate (or the parts overflow 64 bits).
std::optional<std::string> parse_fraction(std::string_view s) {
  std::size_t slash = s.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  std::string_view num_s = trim(s.substr(0, slash));
  std::string_view den_s = trim(s.substr(slash + 1));

  auto parse_u64 = [](std::string_view t, bool& neg) -> std::optional<std::uint64_t> {
    neg = false;
    if (!t.empty() && (t.front() == '-' || t.front() == '+')) {
      neg = t.front() == '-';
      t.remove_prefix(1);
    }
    if (t.empty()) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : t) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      if (v > (UINT64_MAX - (c - '0')) / 10) return std::nullopt;
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  };

  bool num_neg = false, den_neg = false;
  auto num = parse_u64(num_s, num_neg);
  auto den = parse_u64(den_s, den_neg);
  if (!num || !den || *den == 0) return std::nullopt;

  std::uint64_t q = *num / *den;
  std::uint64_t rem = *num % *den;
  std::string frac;
  // terminating expansions of a 64-bit denominator need < 64 digits
  for (int i = 0; rem != 0 && i < 64; ++i) {
    if (rem > UINT64_MAX / 10) return std::nullopt;
    rem *= 10;
    frac += static_cast<char>('0' + rem / *den);
    rem %= *den;
  }
  if (rem != 0) return std::nullopt;
  return canonical_decimal(num_neg != den_neg, std::to_string(q), std::move(frac));
}

}  // namespace

std::optional<std::string> normalize_numeric(std::string_view tail) {
  std::string_view s = strip_edge_punct(tail);
  if (s.empty()) return std::nullopt;

  bool negative = false;
  if (s.front() == '-' || s.front() == '+') {
    negative = s.front() == '-';
    s.remove_prefix(1);
    s = trim(s);
  }
  strip_currency_prefix(s);
  // a sign may also sit inside the currency mark: "$-3.50"
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (negative) return std::nullopt;
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  s = trim(s);
  if (!s.empty() && s.back() == '%') {
    s.remove_suffix(1);
    s = trim(s);
  }
  if (s.empty()) return std::nullopt;

  // drop thousands separators: commas directly between digits
  std::string cleaned;
  cleaned.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',' && i > 0 && i + 1 < s.size() &&
        std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      continue;
    }
    cleaned += s[i];
  }

  std::optional<std::string> canon;
  if (cleaned.find('/') != std::string::npos) {
    canon = parse_fraction(cleaned);
  } else {
    canon = parse_plain_decimal(cleaned);
  }
  if (!canon) return std::nullopt;
  if (negative && canon->front() != '-' && *canon != "0") canon->insert(canon->begin(), '-');
  return canon;
}

std::optional<bool> normalize_boolean(std::string_view tail) {
  std::string t = lower(strip_edge_punct(tail));
  if (t == "yes" || t == "true") return true;
  if (t == "no" || t == "false") return false;
  return std::nullopt;
}

std::optional<char> normalize_choice(std::string_view tail,
                                     std::span<const std::string> options) {
  if (options.empty()) return std::nullopt;
  std::string_view t = trim(tail);

  // sentence punctuation after the answer is not part of it
  std::string_view depunct = t;
  while (!depunct.empty() && (depunct.back() == '.' || depunct.back() == ',')) {
    depunct.remove_suffix(1);
  }

  // bare or parenthesized letter, e.g. "B", "(b)", "B."
  std::string_view letterish = depunct;
  bool open = false;
  if (!letterish.empty() && letterish.front() == '(') {
    open = true;
    letterish.remove_prefix(1);
  }
  if (open && !letterish.empty() && letterish.back() == ')') letterish.remove_suffix(1);
  if (letterish.size() == 1 && std::isalpha(static_cast<unsigned char>(letterish.front()))) {
    char up = static_cast<char>(std::toupper(static_cast<unsigned char>(letterish.front())));
    if (static_cast<std::size_t>(up - 'A') < options.size()) return up;
    return std::nullopt;
  }

  // verbatim option text, raw first so options ending in punctuation still hit
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (t == trim(options[i])) return static_cast<char>('A' + i);
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (depunct == trim(options[i])) return static_cast<char>('A' + i);
  }
  return std::nullopt;
}

ExtractionRule rule_for(const QuestionItem& item, const ExtractionOverrides& overrides) {
  ExtractionRule rule;
  if (!overrides.answer_marker.empty()) rule.marker = overrides.answer_marker;
  rule.task_kind = item.task_kind;
  rule.options = item.options;
  return rule;
}

AnswerKey extract_final_answer(std::string_view raw_text, const ExtractionRule& rule) {
  if (rule.marker.empty()) return AnswerKey::unparseable();
  std::string haystack = lower(raw_text);
  std::string needle = lower(rule.marker);
  std::size_t pos = haystack.rfind(needle);
  if (pos == std::string::npos) return AnswerKey::unparseable();

  std::string_view tail = raw_text.substr(pos + needle.size());
  if (std::size_t nl = tail.find('\n'); nl != std::string_view::npos) {
    tail = tail.substr(0, nl);
  }

  switch (rule.task_kind) {
    case TaskKind::numeric: {
      auto v = normalize_numeric(tail);
      return v ? AnswerKey::numeric(*v) : AnswerKey::unparseable();
    }
    case TaskKind::boolean: {
      auto v = normalize_boolean(tail);
      return v ? AnswerKey::boolean(*v) : AnswerKey::unparseable();
    }
    case TaskKind::multiple_choice: {
      auto v = normalize_choice(tail, rule.options);
      return v ? AnswerKey::choice(*v) : AnswerKey::unparseable();
    }
  }
  return AnswerKey::unparseable();
}

}  // namespace mirrorbench

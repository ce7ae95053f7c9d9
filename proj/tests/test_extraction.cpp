#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mirrorbench/extraction.hpp"
#include "mirrorbench/rng.hpp"

#include <string>
#include <vector>

using namespace mirrorbench;

namespace {

ExtractionRule numeric_rule() {
  ExtractionRule r;
  r.task_kind = TaskKind::numeric;
  return r;
}

ExtractionRule boolean_rule() {
  ExtractionRule r;
  r.task_kind = TaskKind::boolean;
  return r;
}

ExtractionRule choice_rule(std::vector<std::string> options) {
  ExtractionRule r;
  r.task_kind = TaskKind::multiple_choice;
  r.options = std::move(options);
  return r;
}

}  // namespace

TEST_CASE("marker extraction basics") {
  CHECK(extract_final_answer("Step 1: compute. So the answer is 42.", numeric_rule()) ==
        AnswerKey::numeric("42"));
  CHECK(extract_final_answer("...So the answer is $1,234.50.", numeric_rule()) ==
        AnswerKey::numeric("1234.5"));
  CHECK(extract_final_answer("...So the answer is maybe.", boolean_rule()) ==
        AnswerKey::unparseable());
  CHECK(extract_final_answer("no marker anywhere", numeric_rule()) ==
        AnswerKey::unparseable());
}

TEST_CASE("last marker occurrence wins, case-insensitively") {
  std::string text =
      "So the answer is 1. But wait, recheck.\n"
      "so the ANSWER is 2.\n"
      "Therefore, SO THE ANSWER IS 3.";
  CHECK(extract_final_answer(text, numeric_rule()) == AnswerKey::numeric("3"));
}

TEST_CASE("tail stops at first newline") {
  CHECK(extract_final_answer("So the answer is 7\n99 unrelated", numeric_rule()) ==
        AnswerKey::numeric("7"));
  CHECK(extract_final_answer("So the answer is\n7", numeric_rule()) ==
        AnswerKey::unparseable());
}

TEST_CASE("idempotence: bare marker text equals long text with same last tail") {
  ExtractionRule rule = numeric_rule();
  std::string tails[] = {"42", "-3.50.", "$12", "7/2", "oops"};
  for (const std::string& t : tails) {
    AnswerKey bare = extract_final_answer("So the answer is " + t, rule);
    AnswerKey wrapped = extract_final_answer(
        "Step 1: blah blah. So the answer is 999.\nStep 2: on reflection...\n"
        "So the answer is " + t, rule);
    CHECK(bare == wrapped);
  }
}

TEST_CASE("custom marker override") {
  ExtractionRule rule = numeric_rule();
  rule.marker = "Final result:";
  CHECK(extract_final_answer("Final result: 12", rule) == AnswerKey::numeric("12"));
  CHECK(extract_final_answer("So the answer is 12", rule) == AnswerKey::unparseable());
}

TEST_CASE("normalize_numeric spec examples") {
  CHECK(normalize_numeric("  -3.50.") == "-3.5");
  CHECK(normalize_numeric("7/2") == "3.5");
  CHECK_FALSE(normalize_numeric("twelve").has_value());
}

TEST_CASE("normalize_numeric canonical forms") {
  CHECK(normalize_numeric("042") == "42");
  CHECK(normalize_numeric("42.000") == "42");
  CHECK(normalize_numeric(".5") == "0.5");
  CHECK(normalize_numeric("5.") == "5");
  CHECK(normalize_numeric("-0") == "0");
  CHECK(normalize_numeric("-0.0") == "0");
  CHECK(normalize_numeric("0.50") == "0.5");
  CHECK(normalize_numeric("1,234,567") == "1234567");
  CHECK(normalize_numeric("$-3.50") == "-3.5");
  CHECK(normalize_numeric("€12") == "12");
  CHECK(normalize_numeric("50%") == "50");
  CHECK(normalize_numeric("(18)") == "18");
  CHECK(normalize_numeric("\"72\"") == "72");
}

TEST_CASE("normalize_numeric fractions") {
  CHECK(normalize_numeric("-7/2") == "-3.5");
  CHECK(normalize_numeric("10/4") == "2.5");
  CHECK(normalize_numeric("8/2") == "4");
  CHECK(normalize_numeric("0/5") == "0");
  CHECK(normalize_numeric("1/8") == "0.125");
  CHECK_FALSE(normalize_numeric("1/3").has_value());  // non-terminating
  CHECK_FALSE(normalize_numeric("1/0").has_value());
  CHECK_FALSE(normalize_numeric("1/2/3").has_value());
}

TEST_CASE("normalize_numeric rejections") {
  CHECK_FALSE(normalize_numeric("").has_value());
  CHECK_FALSE(normalize_numeric("  .  ").has_value());
  CHECK_FALSE(normalize_numeric("1.2.3").has_value());
  CHECK_FALSE(normalize_numeric("--3").has_value());
  CHECK_FALSE(normalize_numeric("3 dollars").has_value());
  CHECK_FALSE(normalize_numeric("1e5").has_value());  // no exponent support
}

TEST_CASE("normalize_boolean") {
  CHECK(normalize_boolean("Yes") == true);
  CHECK(normalize_boolean("FALSE.") == false);
  CHECK(normalize_boolean(" true") == true);
  CHECK(normalize_boolean("No!") == false);
  CHECK_FALSE(normalize_boolean("unknown").has_value());
  CHECK_FALSE(normalize_boolean("yes and no").has_value());
}

TEST_CASE("normalize_choice") {
  std::vector<std::string> options = {"01/01/2020", "05/06/2021", "12/31/2019", "07/04/1999"};
  CHECK(normalize_choice("(B)", options) == 'B');
  CHECK(normalize_choice("b", options) == 'B');
  CHECK(normalize_choice("(d).", options) == 'D');
  CHECK(normalize_choice("05/06/2021", options) == 'B');
  CHECK_FALSE(normalize_choice("(Z)", options).has_value());
  CHECK_FALSE(normalize_choice("06/06/2021", options).has_value());
  CHECK_FALSE(normalize_choice("B", {}).has_value());
}

TEST_CASE("extract_final_answer drives choice normalization") {
  ExtractionRule rule = choice_rule({"03/01/2021", "03/07/2021", "02/28/2021"});
  CHECK(extract_final_answer("...\nSo the answer is (B).", rule) == AnswerKey::choice('B'));
  CHECK(extract_final_answer("So the answer is 02/28/2021", rule) == AnswerKey::choice('C'));
  CHECK(extract_final_answer("So the answer is (F).", rule) == AnswerKey::unparseable());
}

TEST_CASE("choice letter range follows option count") {
  std::vector<std::string> two = {"x", "y"};
  CHECK(normalize_choice("(B)", two) == 'B');
  CHECK_FALSE(normalize_choice("(C)", two).has_value());
}

// Property: a canonical decimal decorated with whitespace, currency marks,
// thousands commas, and trailing punctuation normalizes back to itself.
TEST_CASE("numeric normalization round-trips decorated canonical values") {
  RngStream rng(20240817);
  for (int iter = 0; iter < 2000; ++iter) {
    // build a canonical decimal
    bool neg = rng.uniform_index(2) == 1;
    std::string int_part = std::to_string(rng.next_u64() % 1000000);
    std::string frac_part;
    std::size_t frac_len = rng.uniform_index(4);
    for (std::size_t i = 0; i < frac_len; ++i) {
      frac_part += static_cast<char>('0' + rng.uniform_index(10));
    }
    while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();
    std::string canon = int_part;
    if (!frac_part.empty()) canon += "." + frac_part;
    if (neg && canon != "0") canon.insert(canon.begin(), '-');

    // decorate: commas in the integer part, currency, edge noise
    std::string decorated = int_part;
    if (rng.uniform_index(2) == 0 && int_part.size() > 3) {
      decorated.clear();
      int count = 0;
      for (auto it = int_part.rbegin(); it != int_part.rend(); ++it) {
        if (count != 0 && count % 3 == 0) decorated.insert(decorated.begin(), ',');
        decorated.insert(decorated.begin(), *it);
        ++count;
      }
    }
    if (!frac_part.empty()) decorated += "." + frac_part;
    if (neg) decorated.insert(decorated.begin(), '-');
    if (rng.uniform_index(3) == 0) decorated.insert(neg ? 1 : 0, "$");
    if (rng.uniform_index(3) == 0) decorated = "  " + decorated;
    if (rng.uniform_index(3) == 0) decorated += ".";
    if (rng.uniform_index(4) == 0) decorated += "!";

    auto got = normalize_numeric(decorated);
    REQUIRE_MESSAGE(got.has_value(), "input: '", decorated, "'");
    CHECK_MESSAGE(*got == canon, "input: '", decorated, "' canon: '", canon, "'");
  }
}

// Property: terminating fractions agree with their precomputed decimal.
TEST_CASE("fraction normalization matches scaled integer oracle") {
  RngStream rng(99);
  int tested = 0;
  for (int iter = 0; iter < 3000; ++iter) {
    std::uint64_t num = rng.next_u64() % 10000;
    // denominators 2^a * 5^b always terminate
    std::uint64_t den = 1;
    std::size_t twos = rng.uniform_index(5), fives = rng.uniform_index(4);
    for (std::size_t i = 0; i < twos; ++i) den *= 2;
    for (std::size_t i = 0; i < fives; ++i) den *= 5;

    // oracle: scale so den divides a power of ten exactly
    std::size_t digits = std::max(twos, fives);
    std::uint64_t pow10 = 1;
    for (std::size_t i = 0; i < digits; ++i) pow10 *= 10;
    std::uint64_t scaled = num * (pow10 / den);
    std::string digits_str = std::to_string(scaled);
    while (digits_str.size() <= digits) digits_str.insert(digits_str.begin(), '0');
    std::string expect = digits_str.substr(0, digits_str.size() - digits);
    std::string frac = digits_str.substr(digits_str.size() - digits);
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    if (!frac.empty()) expect += "." + frac;

    std::string input = std::to_string(num) + "/" + std::to_string(den);
    auto got = normalize_numeric(input);
    REQUIRE_MESSAGE(got.has_value(), "input: ", input);
    CHECK_MESSAGE(*got == expect, "input: ", input, " expect: ", expect);
    ++tested;
  }
  CHECK(tested == 3000);
}

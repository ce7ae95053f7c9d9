#include "mirrorbench/voting.hpp"

#include <stdexcept>

namespace mirrorbench {

namespace {

// indices into `ranked` holding the maximal count
std::vector<std::size_t> maximal(const std::vector<RankedKey>& ranked) {
  std::vector<std::size_t> out;
  int best = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].count > best) {
      best = ranked[i].count;
      out.clear();
    }
    if (ranked[i].count == best) out.push_back(i);
  }
  return out;
}

// Picks among tied indices (already in first-appearance order). seeded_random
// consumes one draw only for real ties; first_reached consumes nothing.
std::size_t break_tie(const std::vector<std::size_t>& tied, TiePolicy policy, RngStream& rng) {
  if (tied.size() == 1 || policy == TiePolicy::first_reached) return tied.front();
  return tied[rng.uniform_index(tied.size())];
}

}  // namespace

std::vector<RankedKey> tally(std::span<const AnswerKey> answers) {
  std::vector<RankedKey> ranked;
  for (const AnswerKey& a : answers) {
    if (!a.parseable()) continue;
    bool found = false;
    for (RankedKey& r : ranked) {
      if (answers_equal(r.key, a)) {
        ++r.count;
        found = true;
        break;
      }
    }
    if (!found) ranked.push_back({a, 1});
  }
  return ranked;
}

VoteOutcome majority_vote(std::span<const AnswerKey> answers, TiePolicy policy, RngStream& rng) {
  std::vector<RankedKey> ranked = tally(answers);
  if (ranked.empty()) return {};

  std::vector<std::size_t> tied = maximal(ranked);
  std::size_t pick = break_tie(tied, policy, rng);
  return {ranked[pick].key, ranked[pick].count, tied.size() > 1};
}

std::string representative_text(std::span<const ResponseEntry> entries, const AnswerKey& winner,
                                RngStream& rng) {
  std::vector<const ResponseEntry*> supporters;
  for (const ResponseEntry& e : entries) {
    if (answers_equal(e.key, winner)) supporters.push_back(&e);
  }
  if (supporters.empty()) throw std::logic_error("representative_text: winner has no supporters");
  return supporters[rng.uniform_index(supporters.size())]->raw_text;
}

std::optional<TopTwo> top_two(std::span<const AnswerKey> answers, TiePolicy policy,
                              RngStream& rng) {
  std::vector<RankedKey> ranked = tally(answers);
  if (ranked.empty()) return std::nullopt;

  std::vector<std::size_t> tied = maximal(ranked);
  std::size_t first = break_tie(tied, policy, rng);

  TopTwo out{ranked[first], std::nullopt};
  if (ranked.size() == 1) return out;

  std::vector<RankedKey> rest;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i != first) rest.push_back(ranked[i]);
  }
  std::vector<std::size_t> tied2 = maximal(rest);
  out.second = rest[break_tie(tied2, policy, rng)];
  return out;
}

}  // namespace mirrorbench

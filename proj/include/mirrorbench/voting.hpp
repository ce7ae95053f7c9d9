#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mirrorbench/core.hpp"
#include "mirrorbench/rng.hpp"

namespace mirrorbench {

/// Plurality vote result. winner is absent exactly when no answer was
/// parseable (abstention). tie is true when more than one key shared the
/// maximal count and the policy had to pick.
struct VoteOutcome {
  std::optional<AnswerKey> winner;
  int count = 0;
  bool tie = false;
};

struct RankedKey {
  AnswerKey key;
  int count = 0;
};

/// First and second place by count. second is absent when only one unique
/// parseable key exists.
struct TopTwo {
  RankedKey first;
  std::optional<RankedKey> second;
};

/// Parseable keys tallied in first-appearance order (the order ties are
/// enumerated in, which both tie policies depend on).
std::vector<RankedKey> tally(std::span<const AnswerKey> answers);

/// Plurality winner among parseable answers. Unparseable answers never win;
/// all-unparseable (or empty) input abstains. Ties consume one rng draw under
/// seeded_random; first_reached picks the earliest-seen tied key and consumes
/// nothing.
VoteOutcome majority_vote(std::span<const AnswerKey> answers, TiePolicy policy, RngStream& rng);

/// Uniformly seeded choice among the raw texts whose key equals winner.
/// Throws std::logic_error when winner has no supporters.
std::string representative_text(std::span<const ResponseEntry> entries, const AnswerKey& winner,
                                RngStream& rng);

/// Top two ranked keys; absent entirely on abstention. Second-place ties are
/// resolved by the same policy (and consume a draw under seeded_random).
std::optional<TopTwo> top_two(std::span<const AnswerKey> answers, TiePolicy policy,
                              RngStream& rng);

}  // namespace mirrorbench

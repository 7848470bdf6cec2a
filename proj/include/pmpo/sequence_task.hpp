#pragma once

#include "pmpo/policy.hpp"

namespace pmpo {

// Reward = number of occurrences of target_token in the sequence.
struct SequenceTask {
  std::size_t vocab_size = 4;
  std::size_t length = 6;
  Token target_token = 0;

  void validate() const;
  // Throws InputError on out-of-range tokens or length > length.
  double reward(std::span<const Token> y) const;
};

double sequence_reward(const SequenceTask& task, std::span<const Token> y);

// Exact E_{y ~ policy(.|x)}[reward(y)] for full-length sequences, by
// propagating the distribution over contexts one position at a time.
double expected_sequence_reward(const SequenceTask& task, const AutoregressivePolicy& policy, Condition x = 0);

}  // namespace pmpo

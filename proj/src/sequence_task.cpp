#include "pmpo/sequence_task.hpp"

#include "pmpo/errors.hpp"

#include <cmath>
#include <string>

namespace pmpo {

void SequenceTask::validate() const {
  if (vocab_size == 0) throw InputError("sequence task: vocab_size must be positive");
  if (length == 0) throw InputError("sequence task: length must be positive");
  if (target_token >= vocab_size) throw InputError("sequence task: target_token must be < vocab_size");
}

double SequenceTask::reward(std::span<const Token> y) const {
  if (y.size() > length)
    throw InputError("sequence task: sequence length " + std::to_string(y.size()) + " exceeds " +
                     std::to_string(length));
  double count = 0.0;
  for (Token t : y) {
    if (t >= vocab_size) throw InputError("sequence task: token " + std::to_string(t) + " out of range");
    if (t == target_token) count += 1.0;
  }
  return count;
}

double sequence_reward(const SequenceTask& task, std::span<const Token> y) { return task.reward(y); }

double expected_sequence_reward(const SequenceTask& task, const AutoregressivePolicy& policy, Condition x) {
  task.validate();
  if (policy.vocab_size() != task.vocab_size || policy.max_length() != task.length)
    throw InputError("expected_sequence_reward: policy does not match the task's vocab and length");
  policy.check_condition(x);
  std::vector<double> mass(policy.context_count(), 0.0);
  mass[AutoregressivePolicy::initial_context()] = 1.0;
  double total = 0.0;
  for (std::size_t pos = 0; pos < task.length; ++pos) {
    std::vector<double> next(policy.context_count(), 0.0);
    for (std::size_t ctx = 0; ctx < mass.size(); ++ctx) {
      if (mass[ctx] == 0.0) continue;
      const auto lp = policy.step_log_probs(x, ctx);
      for (Token t = 0; t < lp.size(); ++t) {
        const double p = mass[ctx] * std::exp(lp[t]);
        if (t == task.target_token) total += p;
        next[policy.next_context(ctx, t)] += p;
      }
    }
    mass = std::move(next);
  }
  return total;
}

}  // namespace pmpo

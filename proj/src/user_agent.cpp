#include "qclar/user_agent.hpp"

#include <random>
#include <utility>

#include "qclar/errors.hpp"

namespace qclar {

FeedbackTurn select(const IndexedCandidate& a, const IndexedCandidate& b, const Intent& intent) {
  if (a.index == b.index) {
    throw ValidationError("user agent was shown candidate " + std::to_string(a.index) + " twice");
  }
  const double sa = dot(a.embedding, intent.embedding);
  const double sb = dot(b.embedding, intent.embedding);
  const bool a_wins = sa > sb || (sa == sb && a.index < b.index);
  const IndexedCandidate& win = a_wins ? a : b;
  const IndexedCandidate& lose = a_wins ? b : a;
  return FeedbackTurn{win.embedding, lose.embedding, win.index, lose.index};
}

UserAgent::UserAgent(double flip_probability, std::uint64_t seed)
    : flip_probability_(flip_probability), rng_(seed) {
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw ValidationError("user flip probability must lie in [0, 1]");
  }
}

FeedbackTurn UserAgent::choose(const IndexedCandidate& a, const IndexedCandidate& b,
                               const Intent& intent) {
  FeedbackTurn turn = select(a, b, intent);
  if (flip_probability_ > 0.0 &&
      std::bernoulli_distribution(flip_probability_)(rng_)) {
    std::swap(turn.selected, turn.rejected);
    std::swap(turn.selected_index, turn.rejected_index);
  }
  return turn;
}

}  // namespace qclar

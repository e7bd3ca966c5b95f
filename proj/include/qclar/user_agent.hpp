#pragma once

#include <cstddef>
#include <cstdint>

#include "qclar/embedding_store.hpp"
#include "qclar/random.hpp"
#include "qclar/scenario.hpp"

namespace qclar {

struct IndexedCandidate {
  std::size_t index = 0;
  Embedding embedding;
};

// One interaction: the candidate the user picked (q+) and the one left behind (q-).
struct FeedbackTurn {
  Embedding selected;
  Embedding rejected;
  std::size_t selected_index = 0;
  std::size_t rejected_index = 0;

  bool operator==(const FeedbackTurn&) const = default;
};

// Greedy cooperative choice: the candidate with the larger dot product with the
// intent wins, ties go to the lower candidate index. Order of a and b is irrelevant.
FeedbackTurn select(const IndexedCandidate& a, const IndexedCandidate& b, const Intent& intent);

// Greedy user with an optional flip probability. With flip_probability == 0 no
// random numbers are drawn.
class UserAgent {
 public:
  explicit UserAgent(double flip_probability = 0.0, std::uint64_t seed = 0);

  FeedbackTurn choose(const IndexedCandidate& a, const IndexedCandidate& b, const Intent& intent);

 private:
  double flip_probability_;
  Rng rng_;
};

}  // namespace qclar

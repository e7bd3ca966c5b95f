#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "qclar/random.hpp"
#include "qclar/ranker.hpp"
#include "qclar/scenario.hpp"
#include "qclar/user_agent.hpp"

namespace qclar {

enum class PolicyKind {
  kNaive,         // rank once, then a knock-out tournament down the frozen list
  kRandomSample,  // re-rank, show two uniformly drawn remaining candidates
  kTop2,          // re-rank, show ranks 1 and 2
  kRandomAt5,     // re-rank, show two drawn from ranks 1-5
  kKMeans,        // 2-means over the remaining set, show each cluster's best; drop the loser's cluster
};

// CLI spellings: naive, random, top2, random5, kmeans.
std::string_view policy_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);
std::vector<PolicyKind> all_policy_kinds();

struct SelectionState {
  const ClarificationScenario* scenario = nullptr;
  std::vector<std::size_t> remaining;  // candidate indices still in play
  InteractionHistory history;          // one turn per completed interaction
};

// Higher-ranked candidate first.
struct ProposedPair {
  std::size_t first = 0;
  std::size_t second = 0;

  bool operator==(const ProposedPair&) const = default;
};

class SelectionPolicy {
 public:
  SelectionPolicy(const ClarificationScenario& scenario, std::uint64_t seed);
  virtual ~SelectionPolicy() = default;

  SelectionPolicy(const SelectionPolicy&) = delete;
  SelectionPolicy& operator=(const SelectionPolicy&) = delete;

  virtual PolicyKind kind() const = 0;

  // Two distinct members of `remaining`, or nullopt once fewer than two remain.
  virtual std::optional<ProposedPair> propose(const RankerModel& model) = 0;

  // Records the turn and shrinks `remaining` as the policy dictates.
  // Throws ValidationError if the feedback names an index that is not in play.
  virtual void update(const FeedbackTurn& feedback);

  // Best remaining candidate under the accumulated history.
  virtual std::size_t final_query(const RankerModel& model) const;

  const SelectionState& state() const { return state_; }

 protected:
  void check_feedback(const FeedbackTurn& feedback) const;
  std::vector<std::size_t> ranked(const RankerModel& model) const;

  SelectionState state_;
  Rng rng_;
  std::uint64_t seed_;
};

std::unique_ptr<SelectionPolicy> make_policy(PolicyKind kind, const ClarificationScenario& scenario,
                                             std::uint64_t seed);

}  // namespace qclar

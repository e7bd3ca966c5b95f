#include "qclar/policies.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "qclar/errors.hpp"
#include "qclar/kmeans.hpp"

namespace qclar {

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kNaive: return "naive";
    case PolicyKind::kRandomSample: return "random";
    case PolicyKind::kTop2: return "top2";
    case PolicyKind::kRandomAt5: return "random5";
    case PolicyKind::kKMeans: return "kmeans";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (const auto kind : all_policy_kinds()) {
    if (policy_name(kind) == name) return kind;
  }
  throw ValidationError("unknown policy '" + std::string(name) +
                        "' (expected naive, random, top2, random5 or kmeans)");
}

std::vector<PolicyKind> all_policy_kinds() {
  return {PolicyKind::kNaive, PolicyKind::kRandomSample, PolicyKind::kTop2,
          PolicyKind::kRandomAt5, PolicyKind::kKMeans};
}

SelectionPolicy::SelectionPolicy(const ClarificationScenario& scenario, std::uint64_t seed)
    : rng_(seed), seed_(seed) {
  state_.scenario = &scenario;
  state_.remaining.resize(scenario.size());
  std::iota(state_.remaining.begin(), state_.remaining.end(), std::size_t{0});
}

void SelectionPolicy::check_feedback(const FeedbackTurn& feedback) const {
  const auto& rem = state_.remaining;
  for (const auto idx : {feedback.selected_index, feedback.rejected_index}) {
    if (std::find(rem.begin(), rem.end(), idx) == rem.end()) {
      throw ValidationError("feedback names candidate " + std::to_string(idx) +
                            ", which is no longer in play");
    }
  }
  if (feedback.selected_index == feedback.rejected_index) {
    throw ValidationError("feedback selects and rejects the same candidate");
  }
}

std::vector<std::size_t> SelectionPolicy::ranked(const RankerModel& model) const {
  return rank_candidates(*state_.scenario, state_.remaining, state_.history, model);
}

void SelectionPolicy::update(const FeedbackTurn& feedback) {
  check_feedback(feedback);
  state_.history.append(feedback);
}

std::size_t SelectionPolicy::final_query(const RankerModel& model) const {
  return ranked(model).front();
}

namespace {

// Positions a < b of `ranked`, returned as candidate indices, higher rank first.
ProposedPair from_positions(const std::vector<std::size_t>& ranked, std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return {ranked[a], ranked[b]};
}

ProposedPair two_of_top(const std::vector<std::size_t>& ranked, std::size_t pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> first(0, pool - 1);
  std::uniform_int_distribution<std::size_t> second(0, pool - 2);
  const std::size_t a = first(rng);
  std::size_t b = second(rng);
  if (b >= a) ++b;
  return from_positions(ranked, a, b);
}

class NaivePolicy final : public SelectionPolicy {
 public:
  using SelectionPolicy::SelectionPolicy;

  PolicyKind kind() const override { return PolicyKind::kNaive; }

  std::optional<ProposedPair> propose(const RankerModel& model) override {
    freeze(model);
    if (state_.remaining.size() < 2) return std::nullopt;
    return ProposedPair{state_.remaining[0], state_.remaining[1]};
  }

  void update(const FeedbackTurn& feedback) override {
    SelectionPolicy::update(feedback);
    auto& rem = state_.remaining;
    rem.erase(std::find(rem.begin(), rem.end(), feedback.rejected_index));
  }

  std::size_t final_query(const RankerModel& model) const override {
    if (!frozen_) {
      return rank_candidates(*state_.scenario, state_.remaining, {}, model).front();
    }
    return state_.remaining.front();
  }

 private:
  // The only ranking of the session, with an empty history; `remaining` keeps its order.
  void freeze(const RankerModel& model) {
    if (frozen_) return;
    state_.remaining = rank_candidates(*state_.scenario, state_.remaining, {}, model);
    frozen_ = true;
  }

  bool frozen_ = false;
};

class RandomSamplePolicy final : public SelectionPolicy {
 public:
  using SelectionPolicy::SelectionPolicy;

  PolicyKind kind() const override { return PolicyKind::kRandomSample; }

  std::optional<ProposedPair> propose(const RankerModel& model) override {
    if (state_.remaining.size() < 2) return std::nullopt;
    const auto order = ranked(model);
    return two_of_top(order, order.size(), rng_);
  }
};

class Top2Policy final : public SelectionPolicy {
 public:
  using SelectionPolicy::SelectionPolicy;

  PolicyKind kind() const override { return PolicyKind::kTop2; }

  std::optional<ProposedPair> propose(const RankerModel& model) override {
    if (state_.remaining.size() < 2) return std::nullopt;
    const auto order = ranked(model);
    return ProposedPair{order[0], order[1]};
  }
};

class RandomAt5Policy final : public SelectionPolicy {
 public:
  using SelectionPolicy::SelectionPolicy;

  PolicyKind kind() const override { return PolicyKind::kRandomAt5; }

  std::optional<ProposedPair> propose(const RankerModel& model) override {
    if (state_.remaining.size() < 2) return std::nullopt;
    const auto order = ranked(model);
    return two_of_top(order, std::min<std::size_t>(5, order.size()), rng_);
  }
};

class KMeansPolicy final : public SelectionPolicy {
 public:
  using SelectionPolicy::SelectionPolicy;

  PolicyKind kind() const override { return PolicyKind::kKMeans; }

  std::optional<ProposedPair> propose(const RankerModel& model) override {
    if (state_.remaining.size() < 2) return std::nullopt;
    cluster();
    const auto order = ranked(model);
    std::optional<std::size_t> best[2];
    std::size_t pos[2] = {0, 0};
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto c = cluster_of(order[r]);
      if (!best[c]) {
        best[c] = order[r];
        pos[c] = r;
      }
    }
    return pos[0] < pos[1] ? ProposedPair{*best[0], *best[1]} : ProposedPair{*best[1], *best[0]};
  }

  void update(const FeedbackTurn& feedback) override {
    check_feedback(feedback);
    cluster();
    const auto losing = cluster_of(feedback.rejected_index);
    if (cluster_of(feedback.selected_index) == losing) {
      throw ValidationError("k-means feedback must compare candidates from different clusters");
    }
    SelectionPolicy::update(feedback);
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < state_.remaining.size(); ++k) {
      if (assignment_[k] != losing) kept.push_back(state_.remaining[k]);
    }
    state_.remaining = std::move(kept);
    assignment_.clear();
  }

 private:
  // Re-clusters the surviving candidates once per turn; seeded by turn number.
  void cluster() {
    if (!assignment_.empty()) return;
    std::vector<Embedding> points;
    points.reserve(state_.remaining.size());
    for (const auto idx : state_.remaining) points.push_back(state_.scenario->candidates[idx]);
    assignment_ = kmeans_2(points, derive_seed(seed_, state_.history.size())).assignment;
  }

  std::uint8_t cluster_of(std::size_t candidate) const {
    const auto& rem = state_.remaining;
    const auto it = std::find(rem.begin(), rem.end(), candidate);
    return assignment_[static_cast<std::size_t>(it - rem.begin())];
  }

  std::vector<std::uint8_t> assignment_;  // parallel to state_.remaining
};

}  // namespace

std::unique_ptr<SelectionPolicy> make_policy(PolicyKind kind, const ClarificationScenario& scenario,
                                             std::uint64_t seed) {
  switch (kind) {
    case PolicyKind::kNaive: return std::make_unique<NaivePolicy>(scenario, seed);
    case PolicyKind::kRandomSample: return std::make_unique<RandomSamplePolicy>(scenario, seed);
    case PolicyKind::kTop2: return std::make_unique<Top2Policy>(scenario, seed);
    case PolicyKind::kRandomAt5: return std::make_unique<RandomAt5Policy>(scenario, seed);
    case PolicyKind::kKMeans: return std::make_unique<KMeansPolicy>(scenario, seed);
  }
  throw ValidationError("unknown policy kind");
}

}  // namespace qclar

#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qclar/errors.hpp"
#include "qclar/policies.hpp"

using namespace qclar;

namespace {

RankerModel tiny_model(std::size_t dim, std::uint64_t seed) {
  RankerShape s;
  s.dim = dim;
  s.inner_hidden = 4;
  s.outer_hidden = 4;
  s.scorer_hidden = {8};
  return RankerModel::random(s, seed);
}

FeedbackTurn greedy(const ClarificationScenario& sc, const ProposedPair& p) {
  return select({p.first, sc.candidates[p.first]}, {p.second, sc.candidates[p.second]}, sc.intent);
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TEST_CASE("policy names round trip") {
  for (const auto kind : all_policy_kinds()) CHECK(parse_policy_kind(policy_name(kind)) == kind);
  CHECK(all_policy_kinds().size() == 5);
  CHECK_THROWS_AS(parse_policy_kind("bogus"), ValidationError);
}

TEST_CASE("every policy proposes two distinct candidates still in play, higher-ranked first") {
  Rng rng(14);
  for (const auto kind : all_policy_kinds()) {
    CAPTURE(policy_name(kind));
    for (int trial = 0; trial < 10; ++trial) {
      const auto sc = fixture::random_scenario("p" + std::to_string(trial), 12, 6, rng);
      const auto model = tiny_model(6, trial);
      auto policy = make_policy(kind, sc, 1000 + trial);
      for (int t = 0; t < 6; ++t) {
        const auto before = policy->state().remaining;
        const auto pair = policy->propose(model);
        if (!pair) {
          CHECK(before.size() < 2);
          break;
        }
        CHECK(pair->first != pair->second);
        CHECK(contains(policy->state().remaining, pair->first));
        CHECK(contains(policy->state().remaining, pair->second));
        if (kind != PolicyKind::kNaive) {
          const auto order = rank_candidates(sc, policy->state().remaining, policy->state().history, model);
          const auto pos = [&](std::size_t i) { return std::find(order.begin(), order.end(), i) - order.begin(); };
          CHECK(pos(pair->first) < pos(pair->second));
        }
        policy->update(greedy(sc, *pair));
        CHECK(policy->state().history.size() == static_cast<std::size_t>(t + 1));
        CHECK(contains(policy->state().remaining, policy->final_query(model)));
      }
    }
  }
}

TEST_CASE("top2 shows ranks one and two; random@5 stays in the top five") {
  Rng rng(15);
  const auto sc = fixture::random_scenario("t", 20, 6, rng);
  const auto model = tiny_model(6, 3);
  auto top2 = make_policy(PolicyKind::kTop2, sc, 1);
  auto r5 = make_policy(PolicyKind::kRandomAt5, sc, 1);
  for (int t = 0; t < 5; ++t) {
    const auto order = rank_candidates(sc, top2->state().remaining, top2->state().history, model);
    const auto p = *top2->propose(model);
    CHECK(p == ProposedPair{order[0], order[1]});
    top2->update(greedy(sc, p));

    const auto order5 = rank_candidates(sc, r5->state().remaining, r5->state().history, model);
    const auto q = *r5->propose(model);
    const std::vector<std::size_t> top5(order5.begin(), order5.begin() + 5);
    CHECK(contains(top5, q.first));
    CHECK(contains(top5, q.second));
    r5->update(greedy(sc, q));
  }
}

TEST_CASE("naive tournament ends with the candidate closest to the intent") {
  Rng rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 3 + trial % 8;
    const auto sc = fixture::random_scenario("n" + std::to_string(trial), m, 5, rng);
    const auto model = tiny_model(5, trial);
    auto policy = make_policy(PolicyKind::kNaive, sc, trial);
    for (std::size_t t = 0; t + 1 < m; ++t) policy->update(greedy(sc, *policy->propose(model)));
    CHECK_FALSE(policy->propose(model).has_value());
    REQUIRE(policy->state().remaining.size() == 1);
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (oracle::dot(sc.candidates[i], sc.intent.embedding) > oracle::dot(sc.candidates[best], sc.intent.embedding)) best = i;
    }
    CHECK(policy->final_query(model) == best);
  }
}

TEST_CASE("naive policy keeps the winner at the head of its frozen list") {
  Rng rng(17);
  const auto sc = fixture::random_scenario("h", 6, 5, rng);
  const auto model = tiny_model(5, 2);
  auto policy = make_policy(PolicyKind::kNaive, sc, 0);
  const auto frozen = rank_candidates(sc, policy->state().remaining, {}, model);
  CHECK(policy->final_query(model) == frozen.front());
  const auto p = *policy->propose(model);
  CHECK(p == ProposedPair{frozen[0], frozen[1]});
  const auto fb = greedy(sc, p);
  policy->update(fb);
  CHECK(policy->state().remaining.front() == fb.selected_index);
  CHECK(policy->state().remaining.size() == 5);
}

TEST_CASE("k-means policy drops the rejected cluster") {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const auto tb = fixture::two_block_scenario("k" + std::to_string(trial), 10, 8, rng);
    const auto& sc = tb.scenario;
    const auto model = tiny_model(8, trial);
    auto policy = make_policy(PolicyKind::kKMeans, sc, trial);
    const auto p = *policy->propose(model);
    CHECK(tb.on_intent[p.first] != tb.on_intent[p.second]);
    policy->update(greedy(sc, p));
    for (const auto idx : policy->state().remaining) CHECK(tb.on_intent[idx]);
    CHECK(policy->state().remaining.size() == 5);
  }
}

TEST_CASE("invalid feedback is rejected") {
  Rng rng(19);
  const auto sc = fixture::random_scenario("bad", 6, 5, rng);
  const auto model = tiny_model(5, 1);
  for (const auto kind : all_policy_kinds()) {
    auto policy = make_policy(kind, sc, 0);
    policy->propose(model);
    FeedbackTurn fb{sc.candidates[0], sc.candidates[1], 0, 99};
    CHECK_THROWS_AS(policy->update(fb), ValidationError);
    fb.rejected_index = 0;
    CHECK_THROWS_AS(policy->update(fb), ValidationError);
  }
}

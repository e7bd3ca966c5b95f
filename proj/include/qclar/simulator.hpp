#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qclar/embedding_store.hpp"
#include "qclar/metrics.hpp"
#include "qclar/policies.hpp"
#include "qclar/ranker.hpp"
#include "qclar/scenario.hpp"

namespace qclar {

inline constexpr std::size_t kDefaultTurns = 5;

struct TurnRecord {
  std::size_t turn = 0;  // 1-based
  ProposedPair proposed;
  std::size_t selected_index = 0;
  std::size_t rejected_index = 0;
  std::size_t final_index = 0;  // best-ranked candidate after this turn
  QueryEffectiveness effectiveness;
};

struct SessionTrace {
  std::string scenario_id;
  PolicyKind policy = PolicyKind::kTop2;
  std::size_t initial_final_index = 0;  // no-interaction choice
  QueryEffectiveness initial;
  std::vector<TurnRecord> turns;
  std::size_t turns_executed = 0;
  std::vector<ScoredDoc> final_ranking;  // top-k for the last final query
  QueryEffectiveness user_query;          // q0 itself
  QueryEffectiveness best_reformulation;  // per-metric best over all candidates

  // Effectiveness after t turns; past an early stop the last value carries forward.
  QueryEffectiveness at(std::size_t t) const;
};

struct SessionOptions {
  std::size_t cutoff = kDefaultCutoff;
  double user_flip_probability = 0.0;
};

// Steps A-E for one scenario: up to `turns` propose / select / update rounds,
// stopping early once the policy has fewer than two candidates to show.
SessionTrace run_session(const ClarificationScenario& scenario, PolicyKind policy,
                         const RankerModel& model, std::size_t turns,
                         const DocumentCollection& coll, std::uint64_t seed,
                         const SessionOptions& options = {});

// Session seed: the experiment seed mixed with a stable hash of the scenario id.
std::uint64_t session_seed(std::uint64_t experiment_seed, const std::string& scenario_id);

struct ExperimentOptions {
  SessionOptions session;
  std::size_t workers = 1;
  std::string config_digest;
  bool keep_traces = true;
};

struct ExperimentReport {
  PolicyKind policy = PolicyKind::kTop2;
  std::size_t turns = 0;
  std::size_t scenario_count = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<double> mrr;  // columns: no interaction, 1..turns
  std::vector<double> map;
  QueryEffectiveness user_query;
  QueryEffectiveness best_reformulation;
  // Every scenario's cell at every turn is <= its own best reformulation.
  bool oracle_bound_holds = true;
  std::vector<SessionTrace> traces;  // scenario order; empty unless keep_traces
};

// Runs every scenario (in parallel when workers > 1) and averages per turn.
// The result does not depend on the worker count.
ExperimentReport run_experiment(std::span<const ClarificationScenario> scenarios,
                                PolicyKind policy, const RankerModel& model, std::size_t turns,
                                std::uint64_t seed, const DocumentCollection& coll,
                                const ExperimentOptions& options = {});

void write_report_json(std::ostream& out, const ExperimentReport& report, bool include_traces);

// Strategies as rows, "no interaction" and turns 1..T as columns, mrr@k and map@k per strategy.
void write_report_markdown(std::ostream& out, std::span<const ExperimentReport> reports,
                           std::size_t cutoff = kDefaultCutoff);
void write_report_csv(std::ostream& out, std::span<const ExperimentReport> reports,
                      std::size_t cutoff = kDefaultCutoff);

}  // namespace qclar

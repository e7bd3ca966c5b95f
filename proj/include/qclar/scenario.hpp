#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qclar/embedding_store.hpp"
#include "qclar/metrics.hpp"

namespace qclar {

// What the simulated user is after. The intent embedding doubles as the
// relevant document's embedding in generated corpora.
struct Intent {
  Embedding embedding;
  RelevanceJudgments judgments;

  bool operator==(const Intent&) const = default;
};

// One simulation unit: the initial query, the hidden intent, and the fixed
// candidate reformulation set with its effectiveness labels (positionally aligned).
struct ClarificationScenario {
  std::string id;
  Embedding q0;
  Intent intent;
  std::vector<Embedding> candidates;
  std::vector<EffectivenessLabel> labels;

  std::size_t dim() const { return q0.dim(); }
  std::size_t size() const { return candidates.size(); }

  // Throws ValidationError (prefixed with the scenario id) on a broken invariant.
  void validate() const;

  bool operator==(const ClarificationScenario&) const = default;
};

struct SyntheticConfig {
  std::size_t dim = 32;
  std::size_t num_scenarios = 200;
  std::size_t m = 64;
  // Random unit distractors contributed to the shared collection by each scenario.
  std::size_t num_distractor_docs = 20;
  double alignment_lo = 0.05;
  double alignment_hi = 0.65;
  double initial_query_alignment = 0.35;
  std::size_t cluster_count = 2;
  double cluster_spread = 0.5;
  // All scenarios share one intent direction and labels are (1 + <c, intent>) / 2,
  // so a linear scorer on the candidate alone ranks perfectly.
  bool separable = false;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<ClarificationScenario> scenarios;
  DocumentCollection collection;
};

// Pure function of cfg. Embeddings are rounded to f32 so the corpus survives
// the on-disk embedding format unchanged.
SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg);

// Recomputes every label as the candidate's reciprocal rank at k against coll.
std::vector<ClarificationScenario> relabel(std::vector<ClarificationScenario> scenarios,
                                           const DocumentCollection& coll,
                                           std::size_t k = kDefaultCutoff);

// Every scenario has the collection's dim and its relevant ids exist in coll.
void check_compatible(const std::vector<ClarificationScenario>& scenarios,
                      const DocumentCollection& coll);

// JSON lines, one scenario per line. A leading {"meta": {...}} line is skipped.
// Vector fields may also be string ids resolved through `lookup`.
std::vector<ClarificationScenario> load_scenarios(const std::filesystem::path& path,
                                                  const DocumentCollection* lookup = nullptr);

void save_scenarios(const std::vector<ClarificationScenario>& scenarios,
                    const std::filesystem::path& path, const std::string& config_digest = {});

}  // namespace qclar

#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qclar/embedding_store.hpp"

namespace qclar {

struct ClarificationScenario;

inline constexpr std::size_t kDefaultCutoff = 10;

// Non-empty set of relevant document ids for one information need.
class RelevanceJudgments {
 public:
  RelevanceJudgments() = default;
  // Throws ValidationError when empty.
  explicit RelevanceJudgments(std::set<std::string> relevant);

  const std::set<std::string>& relevant() const { return relevant_; }
  std::size_t size() const { return relevant_.size(); }
  bool is_relevant(const std::string& doc_id) const { return relevant_.contains(doc_id); }

  bool operator==(const RelevanceJudgments&) const = default;

 private:
  std::set<std::string> relevant_;
};

// Supervised effectiveness of one candidate query, in [0, 1].
class EffectivenessLabel {
 public:
  EffectivenessLabel() = default;
  explicit EffectivenessLabel(double value);

  double value() const { return value_; }
  auto operator<=>(const EffectivenessLabel&) const = default;

 private:
  double value_ = 0.0;
};

double reciprocal_rank_at_k(std::span<const std::string> ranking, const RelevanceJudgments& judg,
                            std::size_t k);
double reciprocal_rank_at_k(std::span<const ScoredDoc> ranking, const RelevanceJudgments& judg,
                            std::size_t k);

// Sum of precision@p over relevant hits p <= k, divided by min(|relevant|, k).
double average_precision_at_k(std::span<const std::string> ranking,
                              const RelevanceJudgments& judg, std::size_t k);
double average_precision_at_k(std::span<const ScoredDoc> ranking, const RelevanceJudgments& judg,
                              std::size_t k);

struct QueryEffectiveness {
  double reciprocal_rank = 0.0;
  double average_precision = 0.0;

  bool operator==(const QueryEffectiveness&) const = default;
};

// Retrieves the top k for `query` once and scores it with both metrics.
QueryEffectiveness evaluate_query(const Embedding& query, const DocumentCollection& coll,
                                  const RelevanceJudgments& judg, std::size_t k = kDefaultCutoff);

// Reciprocal rank at k of the candidate's own retrieval run.
EffectivenessLabel effectiveness_label(const Embedding& candidate, const DocumentCollection& coll,
                                       const RelevanceJudgments& judg,
                                       std::size_t k = kDefaultCutoff);

enum class CurveOrder {
  kOracle,     // candidates sorted by decreasing label
  kGenerator,  // candidates in stored generation order
};

struct CurvePoint {
  std::size_t rank = 0;  // 1-based
  double mean_effectiveness = 0.0;
};

// Mean label at each rank across scenarios. All scenarios must share one candidate count.
std::vector<CurvePoint> oracle_rank_curve(std::span<const ClarificationScenario> scenarios,
                                          CurveOrder order = CurveOrder::kOracle);

// CSV with header "rank,mean_effectiveness"; an optional leading "# key=value" comment line.
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve,
                     const std::string& comment = {});

}  // namespace qclar

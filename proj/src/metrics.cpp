#include "qclar/metrics.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <ostream>

#include "qclar/errors.hpp"
#include "qclar/scenario.hpp"

namespace qclar {

RelevanceJudgments::RelevanceJudgments(std::set<std::string> relevant)
    : relevant_(std::move(relevant)) {
  if (relevant_.empty()) {
    throw ValidationError("relevance judgments must name at least one document");
  }
}

EffectivenessLabel::EffectivenessLabel(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError("effectiveness label " + std::to_string(value) + " outside [0, 1]");
  }
}

namespace {

std::vector<std::string> ids_of(std::span<const ScoredDoc> ranking) {
  std::vector<std::string> ids;
  ids.reserve(ranking.size());
  for (const auto& d : ranking) {
    ids.push_back(d.doc_id);
  }
  return ids;
}

}  // namespace

double reciprocal_rank_at_k(std::span<const std::string> ranking, const RelevanceJudgments& judg,
                            std::size_t k) {
  if (k == 0) {
    throw ValidationError("metric cutoff k must be >= 1");
  }
  const std::size_t n = std::min(k, ranking.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (judg.is_relevant(ranking[r])) {
      return 1.0 / static_cast<double>(r + 1);
    }
  }
  return 0.0;
}

double reciprocal_rank_at_k(std::span<const ScoredDoc> ranking, const RelevanceJudgments& judg,
                            std::size_t k) {
  const auto ids = ids_of(ranking);
  return reciprocal_rank_at_k(std::span<const std::string>(ids), judg, k);
}

double average_precision_at_k(std::span<const std::string> ranking,
                              const RelevanceJudgments& judg, std::size_t k) {
  if (k == 0) {
    throw ValidationError("metric cutoff k must be >= 1");
  }
  if (judg.size() == 0) {
    return 0.0;
  }
  const std::size_t n = std::min(k, ranking.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (judg.is_relevant(ranking[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(std::min(judg.size(), k));
}

double average_precision_at_k(std::span<const ScoredDoc> ranking, const RelevanceJudgments& judg,
                              std::size_t k) {
  const auto ids = ids_of(ranking);
  return average_precision_at_k(std::span<const std::string>(ids), judg, k);
}

QueryEffectiveness evaluate_query(const Embedding& query, const DocumentCollection& coll,
                                  const RelevanceJudgments& judg, std::size_t k) {
  const auto ranking = retrieve_top_k(query, coll, k);
  return {reciprocal_rank_at_k(std::span<const ScoredDoc>(ranking), judg, k),
          average_precision_at_k(std::span<const ScoredDoc>(ranking), judg, k)};
}

EffectivenessLabel effectiveness_label(const Embedding& candidate, const DocumentCollection& coll,
                                       const RelevanceJudgments& judg, std::size_t k) {
  if (candidate.dim() != coll.dim()) {
    throw ValidationError("candidate dim " + std::to_string(candidate.dim()) +
                          " vs collection dim " + std::to_string(coll.dim()));
  }
  const auto ranking = retrieve_top_k(candidate, coll, k);
  return EffectivenessLabel(reciprocal_rank_at_k(std::span<const ScoredDoc>(ranking), judg, k));
}

std::vector<CurvePoint> oracle_rank_curve(std::span<const ClarificationScenario> scenarios,
                                          CurveOrder order) {
  if (scenarios.empty()) {
    return {};
  }
  const std::size_t m = scenarios.front().labels.size();
  std::vector<double> sums(m, 0.0);
  std::vector<double> labels;
  for (const auto& s : scenarios) {
    if (s.labels.size() != m) {
      throw ValidationError("scenario '" + s.id + "' has " + std::to_string(s.labels.size()) +
                            " candidates, expected " + std::to_string(m));
    }
    labels.clear();
    for (const auto& l : s.labels) {
      labels.push_back(l.value());
    }
    if (order == CurveOrder::kOracle) {
      std::sort(labels.begin(), labels.end(), std::greater<>());
    }
    for (std::size_t r = 0; r < m; ++r) {
      sums[r] += labels[r];
    }
  }
  std::vector<CurvePoint> curve(m);
  for (std::size_t r = 0; r < m; ++r) {
    curve[r] = {r + 1, sums[r] / static_cast<double>(scenarios.size())};
  }
  return curve;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve,
                     const std::string& comment) {
  if (!comment.empty()) {
    out << "# " << comment << '\n';
  }
  out << "rank,mean_effectiveness\n";
  out << std::setprecision(17);
  for (const auto& p : curve) {
    out << p.rank << ',' << p.mean_effectiveness << '\n';
  }
}

}  // namespace qclar

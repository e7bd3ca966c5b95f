#include "qclar/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qclar/errors.hpp"
#include "qclar/user_agent.hpp"

namespace qclar {

QueryEffectiveness SessionTrace::at(std::size_t t) const {
  if (t == 0 || turns.empty()) return initial;
  return turns[std::min(t, turns.size()) - 1].effectiveness;
}

std::uint64_t session_seed(std::uint64_t experiment_seed, const std::string& scenario_id) {
  return derive_seed(experiment_seed, fnv1a64(scenario_id));
}

namespace {

constexpr std::uint64_t kUserStream = 0x5553455255534552ULL;

class EffectivenessCache {
 public:
  EffectivenessCache(const ClarificationScenario& sc, const DocumentCollection& coll,
                     std::size_t cutoff)
      : sc_(sc), coll_(coll), cutoff_(cutoff), values_(sc.size()) {}

  const QueryEffectiveness& get(std::size_t idx) {
    if (!values_[idx]) {
      values_[idx] = evaluate_query(sc_.candidates[idx], coll_, sc_.intent.judgments, cutoff_);
    }
    return *values_[idx];
  }

 private:
  const ClarificationScenario& sc_;
  const DocumentCollection& coll_;
  std::size_t cutoff_;
  std::vector<std::optional<QueryEffectiveness>> values_;
};

}  // namespace

SessionTrace run_session(const ClarificationScenario& scenario, PolicyKind policy,
                         const RankerModel& model, std::size_t turns,
                         const DocumentCollection& coll, std::uint64_t seed,
                         const SessionOptions& options) {
  scenario.validate();
  if (scenario.dim() != model.shape().dim || scenario.dim() != coll.dim()) {
    throw ValidationError("scenario '" + scenario.id + "' dim " + std::to_string(scenario.dim()) +
                          ", model dim " + std::to_string(model.shape().dim) +
                          ", collection dim " + std::to_string(coll.dim()));
  }
  EffectivenessCache cache(scenario, coll, options.cutoff);
  auto selector = make_policy(policy, scenario, seed);
  UserAgent user(options.user_flip_probability, derive_seed(seed, kUserStream));

  SessionTrace trace;
  trace.scenario_id = scenario.id;
  trace.policy = policy;
  trace.initial_final_index = selector->final_query(model);
  trace.initial = cache.get(trace.initial_final_index);

  std::size_t final_index = trace.initial_final_index;
  for (std::size_t t = 1; t <= turns; ++t) {
    const auto pair = selector->propose(model);
    if (!pair) break;
    const FeedbackTurn feedback =
        user.choose({pair->first, scenario.candidates[pair->first]},
                    {pair->second, scenario.candidates[pair->second]}, scenario.intent);
    selector->update(feedback);
    final_index = selector->final_query(model);
    trace.turns.push_back({t, *pair, feedback.selected_index, feedback.rejected_index, final_index,
                           cache.get(final_index)});
  }
  trace.turns_executed = trace.turns.size();
  trace.final_ranking = retrieve_top_k(scenario.candidates[final_index], coll, options.cutoff);

  trace.user_query = evaluate_query(scenario.q0, coll, scenario.intent.judgments, options.cutoff);
  for (std::size_t i = 0; i < scenario.size(); ++i) {
    const auto& e = cache.get(i);
    trace.best_reformulation.reciprocal_rank =
        std::max(trace.best_reformulation.reciprocal_rank, e.reciprocal_rank);
    trace.best_reformulation.average_precision =
        std::max(trace.best_reformulation.average_precision, e.average_precision);
  }
  return trace;
}

ExperimentReport run_experiment(std::span<const ClarificationScenario> scenarios,
                                PolicyKind policy, const RankerModel& model, std::size_t turns,
                                std::uint64_t seed, const DocumentCollection& coll,
                                const ExperimentOptions& options) {
  if (scenarios.empty()) {
    throw ValidationError("run_experiment needs at least one scenario");
  }
  std::vector<SessionTrace> traces(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      try {
        traces[i] = run_session(scenarios[i], policy, model, turns, coll,
                                session_seed(seed, scenarios[i].id), options.session);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(scenarios.size());
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, scenarios.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentReport report;
  report.policy = policy;
  report.turns = turns;
  report.scenario_count = scenarios.size();
  report.seed = seed;
  report.config_digest = options.config_digest;
  report.mrr.assign(turns + 1, 0.0);
  report.map.assign(turns + 1, 0.0);
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t <= turns; ++t) {
      const auto e = tr.at(t);
      report.mrr[t] += e.reciprocal_rank;
      report.map[t] += e.average_precision;
      if (e.reciprocal_rank > tr.best_reformulation.reciprocal_rank ||
          e.average_precision > tr.best_reformulation.average_precision) {
        report.oracle_bound_holds = false;
      }
    }
    report.user_query.reciprocal_rank += tr.user_query.reciprocal_rank;
    report.user_query.average_precision += tr.user_query.average_precision;
    report.best_reformulation.reciprocal_rank += tr.best_reformulation.reciprocal_rank;
    report.best_reformulation.average_precision += tr.best_reformulation.average_precision;
  }
  const double n = static_cast<double>(traces.size());
  for (auto& v : report.mrr) v /= n;
  for (auto& v : report.map) v /= n;
  report.user_query.reciprocal_rank /= n;
  report.user_query.average_precision /= n;
  report.best_reformulation.reciprocal_rank /= n;
  report.best_reformulation.average_precision /= n;
  if (options.keep_traces) report.traces = std::move(traces);
  return report;
}

namespace {

nlohmann::json effectiveness_json(const QueryEffectiveness& e) {
  return {{"mrr", e.reciprocal_rank}, {"map", e.average_precision}};
}

nlohmann::json trace_json(const SessionTrace& tr) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& r : tr.turns) {
    turns.push_back({{"turn", r.turn},
                     {"proposed", {r.proposed.first, r.proposed.second}},
                     {"selected", r.selected_index},
                     {"rejected", r.rejected_index},
                     {"final_index", r.final_index},
                     {"effectiveness", effectiveness_json(r.effectiveness)}});
  }
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& d : tr.final_ranking) ranking.push_back({{"id", d.doc_id}, {"score", d.score}});
  return {{"scenario_id", tr.scenario_id},
          {"initial_final_index", tr.initial_final_index},
          {"initial", effectiveness_json(tr.initial)},
          {"turns_executed", tr.turns_executed},
          {"turns", std::move(turns)},
          {"final_ranking", std::move(ranking)},
          {"user_query", effectiveness_json(tr.user_query)},
          {"best_reformulation", effectiveness_json(tr.best_reformulation)}};
}

std::string display_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kNaive: return "Naive selection";
    case PolicyKind::kRandomSample: return "Interactive + random sample";
    case PolicyKind::kTop2: return "Interactive + top 2";
    case PolicyKind::kRandomAt5: return "Interactive + random sample@5";
    case PolicyKind::kKMeans: return "Interactive + k-means";
  }
  return "unknown";
}

std::string fmt4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

struct TableRow {
  std::string name;
  std::string metric;
  std::vector<std::string> cells;
};

std::vector<TableRow> table_rows(std::span<const ExperimentReport> reports, std::size_t cutoff) {
  std::vector<TableRow> rows;
  if (reports.empty()) return rows;
  const std::size_t cols = reports.front().turns + 1;
  const std::string mrr = "mrr@" + std::to_string(cutoff);
  const std::string map = "map@" + std::to_string(cutoff);
  const auto baseline = [&](const std::string& name, const std::string& metric, double v) {
    TableRow r{name, metric, std::vector<std::string>(cols, "-")};
    r.cells[0] = fmt4(v);
    rows.push_back(std::move(r));
  };
  const auto& first = reports.front();
  baseline("User Query", mrr, first.user_query.reciprocal_rank);
  baseline("User Query", map, first.user_query.average_precision);
  baseline("Best Reformulation", mrr, first.best_reformulation.reciprocal_rank);
  baseline("Best Reformulation", map, first.best_reformulation.average_precision);
  for (const auto& rep : reports) {
    if (rep.turns + 1 != cols) {
      throw ValidationError("reports in one table must share the number of turns");
    }
    TableRow rm{display_name(rep.policy), mrr, {}};
    TableRow ra{display_name(rep.policy), map, {}};
    for (std::size_t t = 0; t < cols; ++t) {
      rm.cells.push_back(fmt4(rep.mrr[t]));
      ra.cells.push_back(fmt4(rep.map[t]));
    }
    rows.push_back(std::move(rm));
    rows.push_back(std::move(ra));
  }
  return rows;
}

}  // namespace

void write_report_json(std::ostream& out, const ExperimentReport& report, bool include_traces) {
  nlohmann::json j;
  j["policy"] = std::string(policy_name(report.policy));
  j["config_digest"] = report.config_digest;
  j["seed"] = report.seed;
  j["scenario_count"] = report.scenario_count;
  j["turns"] = report.turns;
  j["mrr"] = report.mrr;
  j["map"] = report.map;
  j["baselines"] = {{"user_query", effectiveness_json(report.user_query)},
                    {"best_reformulation", effectiveness_json(report.best_reformulation)}};
  j["oracle_bound_holds"] = report.oracle_bound_holds;
  if (include_traces) {
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& tr : report.traces) traces.push_back(trace_json(tr));
    j["traces"] = std::move(traces);
  }
  out << j.dump(2) << '\n';
}

void write_report_markdown(std::ostream& out, std::span<const ExperimentReport> reports,
                           std::size_t cutoff) {
  if (reports.empty()) return;
  const std::size_t cols = reports.front().turns + 1;
  out << "| Strategy | Metric | No interaction |";
  for (std::size_t t = 1; t < cols; ++t) out << ' ' << t << " |";
  out << "\n|---|---|---|";
  for (std::size_t t = 1; t < cols; ++t) out << "---|";
  out << '\n';
  for (const auto& row : table_rows(reports, cutoff)) {
    out << "| " << row.name << " | " << row.metric << " |";
    for (const auto& c : row.cells) out << ' ' << c << " |";
    out << '\n';
  }
  out << "\nconfig_digest: " << reports.front().config_digest << '\n';
}

void write_report_csv(std::ostream& out, std::span<const ExperimentReport> reports,
                      std::size_t cutoff) {
  if (reports.empty()) return;
  const std::size_t cols = reports.front().turns + 1;
  out << "# config_digest=" << reports.front().config_digest << '\n';
  out << "strategy,metric,no_interaction";
  for (std::size_t t = 1; t < cols; ++t) out << ",turn_" << t;
  out << '\n';
  for (const auto& row : table_rows(reports, cutoff)) {
    out << row.name << ',' << row.metric;
    for (const auto& c : row.cells) out << ',' << c;
    out << '\n';
  }
}

}  // namespace qclar

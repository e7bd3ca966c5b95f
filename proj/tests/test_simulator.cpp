#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "qclar/errors.hpp"
#include "qclar/simulator.hpp"

using namespace qclar;

namespace {

struct World {
  std::vector<ClarificationScenario> scenarios;
  DocumentCollection collection{1};
  RankerModel model{RankerShape{}};
};

World make_world(std::size_t n, std::size_t m, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.dim = 8;
  cfg.num_scenarios = n;
  cfg.m = m;
  cfg.num_distractor_docs = 10;
  cfg.seed = seed;
  auto corpus = generate_synthetic(cfg);
  RankerShape shape;
  shape.dim = 8;
  shape.inner_hidden = 4;
  shape.outer_hidden = 4;
  shape.scorer_hidden = {8};
  return {std::move(corpus.scenarios), std::move(corpus.collection), RankerModel::random(shape, seed)};
}

}  // namespace

TEST_CASE("session trace is consistent with the collection") {
  const auto w = make_world(6, 10, 5);
  for (const auto kind : all_policy_kinds()) {
    for (const auto& sc : w.scenarios) {
      const auto tr = run_session(sc, kind, w.model, 4, w.collection, 77);
      CHECK(tr.turns_executed == tr.turns.size());
      CHECK(tr.turns_executed <= 4);
      CHECK(tr.initial == evaluate_query(sc.candidates[tr.initial_final_index], w.collection, sc.intent.judgments));
      CHECK(tr.user_query == evaluate_query(sc.q0, w.collection, sc.intent.judgments));
      for (const auto& rec : tr.turns) {
        CHECK(rec.effectiveness == evaluate_query(sc.candidates[rec.final_index], w.collection, sc.intent.judgments));
        CHECK(rec.effectiveness.reciprocal_rank <= tr.best_reformulation.reciprocal_rank);
        CHECK(rec.effectiveness.average_precision <= tr.best_reformulation.average_precision);
        CHECK(((rec.selected_index == rec.proposed.first && rec.rejected_index == rec.proposed.second) ||
               (rec.selected_index == rec.proposed.second && rec.rejected_index == rec.proposed.first)));
      }
      CHECK(tr.final_ranking.size() == kDefaultCutoff);
    }
  }
}

TEST_CASE("sessions stop early and carry the last value forward") {
  const auto w = make_world(3, 3, 6);
  const auto tr = run_session(w.scenarios[0], PolicyKind::kNaive, w.model, 5, w.collection, 1);
  CHECK(tr.turns_executed == 2);
  CHECK(tr.at(5) == tr.at(2));
  CHECK(tr.at(0) == tr.initial);
}

TEST_CASE("sessions are reproducible from the seed") {
  const auto w = make_world(4, 12, 7);
  for (const auto kind : {PolicyKind::kRandomSample, PolicyKind::kRandomAt5, PolicyKind::kKMeans}) {
    const auto a = run_session(w.scenarios[1], kind, w.model, 5, w.collection, 3);
    const auto b = run_session(w.scenarios[1], kind, w.model, 5, w.collection, 3);
    REQUIRE(a.turns.size() == b.turns.size());
    for (std::size_t i = 0; i < a.turns.size(); ++i) {
      CHECK(a.turns[i].proposed == b.turns[i].proposed);
      CHECK(a.turns[i].final_index == b.turns[i].final_index);
    }
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const auto w = make_world(2, 4, 8);
  DocumentCollection other(3);
  other.add("x", Embedding({1.0, 0.0, 0.0}));
  CHECK_THROWS_AS(run_session(w.scenarios[0], PolicyKind::kTop2, w.model, 1, other, 1), ValidationError);
}

TEST_CASE("experiment results do not depend on the worker count") {
  const auto w = make_world(9, 10, 9);
  ExperimentOptions one;
  ExperimentOptions many;
  many.workers = 4;
  for (const auto kind : all_policy_kinds()) {
    const auto a = run_experiment(w.scenarios, kind, w.model, 5, 11, w.collection, one);
    const auto b = run_experiment(w.scenarios, kind, w.model, 5, 11, w.collection, many);
    CHECK(a.mrr == b.mrr);
    CHECK(a.map == b.map);
    std::ostringstream ja, jb;
    write_report_json(ja, a, true);
    write_report_json(jb, b, true);
    CHECK(ja.str() == jb.str());
    CHECK(a.oracle_bound_holds);
  }
}

TEST_CASE("report writers") {
  const auto w = make_world(4, 8, 10);
  ExperimentOptions opts;
  opts.config_digest = "0123456789abcdef";
  std::vector<ExperimentReport> reports;
  for (const auto kind : {PolicyKind::kNaive, PolicyKind::kKMeans}) {
    reports.push_back(run_experiment(w.scenarios, kind, w.model, 3, 1, w.collection, opts));
  }
  std::ostringstream js;
  write_report_json(js, reports[0], false);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("config_digest") == "0123456789abcdef");
  CHECK(j.at("mrr").size() == 4);
  CHECK_FALSE(j.contains("traces"));

  std::ostringstream md;
  write_report_markdown(md, reports);
  CHECK(md.str().find("| User Query | mrr@10 |") != std::string::npos);
  CHECK(md.str().find("| Best Reformulation | map@10 |") != std::string::npos);
  CHECK(md.str().find("Interactive + k-means") != std::string::npos);

  std::ostringstream csv;
  write_report_csv(csv, reports);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config_digest=0123456789abcdef");
  std::getline(in, line);
  CHECK(line == "strategy,metric,no_interaction,turn_1,turn_2,turn_3");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4 + 2 * reports.size());
}

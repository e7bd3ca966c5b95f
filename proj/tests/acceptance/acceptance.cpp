// Acceptance suite. One PASS/FAIL line per criterion; exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qclar/cli.hpp"
#include "qclar/config.hpp"
#include "qclar/policies.hpp"
#include "qclar/simulator.hpp"

using namespace qclar;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// -- 1 ----------------------------------------------------------------------

Outcome gradient_correctness() {
  RankerShape shape;
  shape.dim = 8;
  shape.inner_hidden = 8;
  shape.outer_hidden = 8;
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto model = RankerModel::random(shape, 1000 + i);
    InteractionHistory hist;
    for (int t = 0; t < 3; ++t) {
      hist.append({fixture::random_unit(8, rng), fixture::random_unit(8, rng),
                   std::size_t(2 * t), std::size_t(2 * t + 1)});
    }
    const PairSample sample{fixture::random_unit(8, rng), hist, fixture::random_unit(8, rng),
                            fixture::random_unit(8, rng)};
    worst = std::max(worst, gradient_check(model, sample).max_relative_error);
    const PairDropout drop{sample_dropout_mask(shape, 0.3, rng), sample_dropout_mask(shape, 0.3, rng)};
    worst = std::max(worst, gradient_check(model, sample, 1e-4, drop).max_relative_error);
  }
  return {worst < 1e-4, "max relative error " + fmt("%.3e", worst) + " over 10 models"};
}

// -- 2 ----------------------------------------------------------------------

Outcome learnability() {
  SyntheticConfig sc;
  sc.separable = true;
  sc.seed = 42;
  const auto corpus = generate_synthetic(sc);
  RankerShape shape;
  shape.dim = sc.dim;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 43;
  const auto result = train(corpus.scenarios, shape, cfg);
  const double acc = result.log.back().heldout_accuracy;
  return {acc >= 0.95, "held-out pairwise accuracy " + fmt("%.4f", acc) + " after 5 epochs"};
}

// -- 3 ----------------------------------------------------------------------

Outcome tournament_oracle() {
  Rng rng(303);
  std::vector<ClarificationScenario> scs;
  for (int i = 0; i < 100; ++i) scs.push_back(fixture::random_scenario("t" + std::to_string(i), 8, 16, rng));
  const auto coll = fixture::collection_for(scs, 50, rng);
  RankerShape shape;
  shape.dim = 16;
  const auto model = RankerModel::random(shape, 7);
  int hits = 0;
  for (const auto& sc : scs) {
    const auto tr = run_session(sc, PolicyKind::kNaive, model, sc.size() - 1, coll, session_seed(1, sc.id));
    std::size_t best = 0;
    for (std::size_t i = 1; i < sc.size(); ++i) {
      if (oracle::dot(sc.candidates[i], sc.intent.embedding) >
          oracle::dot(sc.candidates[best], sc.intent.embedding)) {
        best = i;
      }
    }
    hits += tr.turns_executed == sc.size() - 1 && tr.turns.back().final_index == best;
  }
  return {hits == 100, std::to_string(hits) + "/100 sessions select the argmax candidate"};
}

// -- 4 ----------------------------------------------------------------------

Outcome cluster_elimination() {
  Rng rng(404);
  RankerShape shape;
  shape.dim = 16;
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    const auto tb = fixture::two_block_scenario("b" + std::to_string(i), 16, 16, rng);
    const auto& sc = tb.scenario;
    const auto model = RankerModel::random(shape, 50 + i);
    auto policy = make_policy(PolicyKind::kKMeans, sc, session_seed(4, sc.id));
    bool good = true;
    for (std::size_t t = 1; t <= kDefaultTurns; ++t) {
      const auto pair = policy->propose(model);
      if (!pair) break;
      if (t > 1) good = good && tb.on_intent[pair->first] && tb.on_intent[pair->second];
      policy->update(select({pair->first, sc.candidates[pair->first]},
                            {pair->second, sc.candidates[pair->second]}, sc.intent));
      if (t == 1) {
        const auto& rem = policy->state().remaining;
        std::size_t on = 0;
        for (const auto idx : rem) on += tb.on_intent[idx];
        good = good && on == rem.size() && rem.size() == sc.size() / 2;
      }
    }
    ok += good;
  }
  return {ok == 100, std::to_string(ok) + "/100 sessions drop the off-intent block at turn 1"};
}

// -- 5 and 6 ----------------------------------------------------------------

struct TrendResult {
  Outcome trend;
  Outcome bound;
};

TrendResult interactivity_trend() {
  const ExperimentConfig cfg;
  const auto corpus = generate_synthetic(cfg.resolved_synthetic());
  RankerShape shape = cfg.ranker;
  shape.dim = cfg.synthetic.dim;
  const auto trained = train(corpus.scenarios, shape, cfg.resolved_train());

  bool trend_ok = true;
  bool bound_ok = true;
  std::ostringstream trend, bound;
  for (const auto kind : all_policy_kinds()) {
    const auto rep = run_experiment(corpus.scenarios, kind, trained.model, cfg.turns, cfg.seed,
                                    corpus.collection);
    const double t0 = rep.mrr.front(), t5 = rep.mrr.back();
    const double rel = (t5 - t0) / t0;
    trend_ok = trend_ok && t5 >= t0;
    if (kind == PolicyKind::kKMeans) trend_ok = trend_ok && rel >= 0.10;
    trend << policy_name(kind) << ' ' << fmt("%.4f", t0) << "->" << fmt("%.4f", t5)
          << (kind == PolicyKind::kKMeans ? " (" + fmt("%+.1f", 100 * rel) + "%)" : "") << "; ";

    bool agg = true;
    for (std::size_t t = 0; t <= cfg.turns; ++t) {
      agg = agg && rep.mrr[t] <= rep.best_reformulation.reciprocal_rank &&
            rep.map[t] <= rep.best_reformulation.average_precision;
    }
    bound_ok = bound_ok && agg && rep.oracle_bound_holds;
    if (!(agg && rep.oracle_bound_holds)) bound << policy_name(kind) << " violates; ";
  }
  std::string t = trend.str();
  t.resize(t.size() - 2);
  return {{trend_ok, "mrr@10 turn 0 -> 5: " + t},
          {bound_ok, bound_ok ? "all 5 policies x 6 columns, per scenario and aggregate" : bound.str()}};
}

// -- 7 ----------------------------------------------------------------------

Outcome metric_correctness() {
  Rng rng(707);
  std::uniform_int_distribution<int> len(0, 20), nrel(1, 6), pick(0, 29);
  int mismatches = 0, single_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> pool;
    for (int i = 0; i < 30; ++i) pool.push_back("d" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<std::string> ranking(pool.begin(), pool.begin() + len(rng));
    std::set<std::string> rel;
    const int want = trial % 4 == 0 ? 1 : nrel(rng);
    while (static_cast<int>(rel.size()) < want) rel.insert("d" + std::to_string(pick(rng)));
    const RelevanceJudgments judg(rel);
    const double rr = reciprocal_rank_at_k(std::span<const std::string>(ranking), judg, 10);
    const double ap = average_precision_at_k(std::span<const std::string>(ranking), judg, 10);
    mismatches += rr != oracle::reciprocal_rank(ranking, rel, 10);
    mismatches += ap != oracle::average_precision(ranking, rel, 10);
    if (rel.size() == 1) single_mismatches += ap != rr;
  }
  return {mismatches == 0 && single_mismatches == 0,
          std::to_string(mismatches) + " oracle mismatches over 1000 rankings, " +
              std::to_string(single_mismatches) + " single-relevant map != mrr"};
}

// -- 8 ----------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const std::vector<std::string> files{
      "scenarios.jsonl", "collection.embv", "model.rnk", "train_log.csv", "report.md", "report.csv",
      "report_naive.json", "report_random.json", "report_top2.json", "report_random5.json",
      "report_kmeans.json"};
  std::vector<std::filesystem::path> dirs;
  for (const auto* workers : {"1", "3"}) {
    const auto dir = fixture::scratch_dir(std::string("determinism-") + workers);
    for (const auto* cmd : {"gen-data", "train", "simulate"}) {
      std::ostringstream out, err;
      const int code = cli::run({"qclarify", cmd, "--seed", "42", "--workers", workers, "--output",
                                 dir.string(), "--set", "report.traces=true"},
                                out, err);
      if (code != 0) return {false, std::string(cmd) + " failed: " + err.str()};
    }
    dirs.push_back(dir);
  }
  std::size_t same = 0;
  std::string diff;
  for (const auto& f : files) {
    const auto a = slurp(dirs[0] / f);
    if (!a.empty() && a == slurp(dirs[1] / f)) ++same;
    else diff += " " + f;
  }
  return {same == files.size(), std::to_string(same) + "/" + std::to_string(files.size()) +
                                    " files byte-identical across --workers 1 and 3" +
                                    (diff.empty() ? "" : ", differing:" + diff)};
}

// -- 9 ----------------------------------------------------------------------

Outcome curve_shape() {
  std::vector<std::vector<ClarificationScenario>> corpora;
  corpora.push_back(generate_synthetic(SyntheticConfig{}).scenarios);
  SyntheticConfig sep;
  sep.separable = true;
  sep.m = 17;
  corpora.push_back(generate_synthetic(sep).scenarios);
  Rng rng(909);
  for (int c = 0; c < 5; ++c) {
    std::vector<ClarificationScenario> scs;
    for (int i = 0; i < 40; ++i) scs.push_back(fixture::random_scenario("c" + std::to_string(i), 3 + 4 * c, 4, rng));
    corpora.push_back(std::move(scs));
  }
  bool ok = true;
  for (const auto& scs : corpora) {
    const auto curve = oracle_rank_curve(scs, CurveOrder::kOracle);
    for (std::size_t r = 1; r < curve.size(); ++r) {
      ok = ok && curve[r].mean_effectiveness <= curve[r - 1].mean_effectiveness;
    }
    std::ostringstream csv;
    write_curve_csv(csv, curve, "config_digest=0");
    std::istringstream in(csv.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line == "rank,mean_effectiveness") continue;
      ++rows;
    }
    ok = ok && rows == scs.front().size();
  }
  return {ok, std::to_string(corpora.size()) + " corpora monotone non-increasing, CSV rows == m"};
}

}  // namespace

int main() {
  // 5 and 6 come from one experiment run.
  std::optional<TrendResult> trend;
  const auto trend_once = [&]() -> const TrendResult& {
    if (!trend) trend = interactivity_trend();
    return *trend;
  };

  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 10, gradient_correctness},
      {2, "learnability on the separable corpus", 120, learnability},
      {3, "naive tournament finds the oracle candidate", 10, tournament_oracle},
      {4, "k-means cluster elimination", 30, cluster_elimination},
      {5, "interactivity trend", 300, [&] { return trend_once().trend; }},
      {6, "oracle bound", 300, [&] { return trend_once().bound; }},
      {7, "metric correctness", 5, metric_correctness},
      {8, "determinism across runs and worker counts", 600, determinism},
      {9, "oracle curve shape", 5, curve_shape},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
              << fmt("%.2f", secs) << " s, limit " << fmt("%.0f", c.time_limit_s) << " s"
              << (in_time ? "" : ", OVER TIME") << ")" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures;
}

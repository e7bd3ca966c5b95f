#include "qclar/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "qclar/errors.hpp"
#include "qclar/metrics.hpp"
#include "qclar/simulator.hpp"

namespace qclar::cli {
namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void ensure_parent(const std::filesystem::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

template <typename Fn>
void write_text_file(const std::filesystem::path& path, Fn&& body) {
  ensure_parent(path);
  std::ostringstream buf;
  body(buf);
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << buf.str();
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

std::vector<ClarificationScenario> load_inputs(const ExperimentConfig& cfg,
                                               std::optional<DocumentCollection>& coll) {
  const auto emb = cfg.embeddings_path();
  if (std::filesystem::exists(emb)) {
    coll.emplace(load_collection(emb));
  }
  return load_scenarios(cfg.scenarios_path(), coll ? &*coll : nullptr);
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto corpus = generate_synthetic(cfg.resolved_synthetic());
  const auto scen_path = cfg.scenarios_path();
  const auto emb_path = cfg.embeddings_path();
  ensure_parent(scen_path);
  ensure_parent(emb_path);
  save_collection(corpus.collection, emb_path);
  save_scenarios(corpus.scenarios, scen_path, cfg.digest());

  double q0_sum = 0.0, best_sum = 0.0;
  for (const auto& sc : corpus.scenarios) {
    q0_sum += effectiveness_label(sc.q0, corpus.collection, sc.intent.judgments, cfg.cutoff).value();
    best_sum += std::max_element(sc.labels.begin(), sc.labels.end())->value();
  }
  const double n = static_cast<double>(corpus.scenarios.size());
  out << "scenarios: " << corpus.scenarios.size() << " (" << scen_path.string() << ")\n"
      << "documents: " << corpus.collection.size() << " (" << emb_path.string() << ")\n"
      << std::fixed << std::setprecision(4)
      << "mean q0 label: " << q0_sum / n << '\n'
      << "mean best label: " << best_sum / n << '\n'
      << "config_digest: " << cfg.digest() << '\n';
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  std::optional<DocumentCollection> coll;
  const auto scenarios = load_inputs(cfg, coll);
  if (scenarios.empty()) {
    throw ValidationError("scenario file " + cfg.scenarios_path().string() + " has no scenarios");
  }
  RankerShape shape = cfg.ranker;
  shape.dim = scenarios.front().dim();
  const TrainConfig tcfg = cfg.resolved_train();
  auto result = train(scenarios, shape, tcfg);
  result.model.set_config_digest(fnv1a64(cfg.canonical_text()));

  const auto model_path = cfg.model_path();
  ensure_parent(model_path);
  save_model(result.model, model_path);
  const auto log_path = cfg.output_dir / "train_log.csv";
  write_text_file(log_path, [&](std::ostream& os) {
    os << "# config_digest=" << cfg.digest() << '\n'
       << "epoch,train_loss,heldout_pairwise_accuracy\n"
       << std::setprecision(17);
    for (const auto& e : result.log) {
      os << e.epoch << ',' << e.train_loss << ',' << e.heldout_accuracy << '\n';
    }
  });
  const auto& last = result.log.back();
  out << "model: " << model_path.string() << '\n'
      << "log: " << log_path.string() << '\n'
      << std::fixed << std::setprecision(4)
      << "initial loss: " << result.log.front().train_loss << '\n'
      << "final loss: " << last.train_loss << '\n'
      << "held-out pairwise accuracy: " << last.heldout_accuracy << '\n';
}

void cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  std::optional<DocumentCollection> coll;
  const auto scenarios = load_inputs(cfg, coll);
  if (!coll) {
    throw IoError("embedding file " + cfg.embeddings_path().string() + " not found");
  }
  if (scenarios.empty()) {
    throw ValidationError("scenario file " + cfg.scenarios_path().string() + " has no scenarios");
  }
  check_compatible(scenarios, *coll);
  const RankerModel model = load_model(cfg.model_path());
  if (model.shape().dim != coll->dim()) {
    throw ValidationError("model dim " + std::to_string(model.shape().dim) +
                          " vs collection dim " + std::to_string(coll->dim()));
  }

  ExperimentOptions opts;
  opts.session.cutoff = cfg.cutoff;
  opts.session.user_flip_probability = cfg.user_flip_probability;
  opts.workers = cfg.workers;
  opts.config_digest = cfg.digest();
  opts.keep_traces = true;

  ensure_dir(cfg.output_dir);
  std::vector<ExperimentReport> reports;
  for (const auto kind : cfg.policies) {
    auto report = run_experiment(scenarios, kind, model, cfg.turns, cfg.seed, *coll, opts);
    const auto path = cfg.output_dir / ("report_" + std::string(policy_name(kind)) + ".json");
    write_text_file(path, [&](std::ostream& os) { write_report_json(os, report, cfg.include_traces); });
    reports.push_back(std::move(report));
  }
  write_text_file(cfg.output_dir / "report.md",
                  [&](std::ostream& os) { write_report_markdown(os, reports, cfg.cutoff); });
  write_text_file(cfg.output_dir / "report.csv",
                  [&](std::ostream& os) { write_report_csv(os, reports, cfg.cutoff); });

  write_report_markdown(out, reports, cfg.cutoff);
  const bool bound = std::all_of(reports.begin(), reports.end(),
                                 [](const auto& r) { return r.oracle_bound_holds; });
  out << "oracle bound: " << (bound ? "holds" : "VIOLATED") << '\n';
}

void cmd_curve(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  std::optional<DocumentCollection> coll;
  const auto scenarios = load_inputs(cfg, coll);
  const std::string comment = "config_digest=" + cfg.digest();
  const auto oracle = oracle_rank_curve(scenarios, CurveOrder::kOracle);
  const auto generator = oracle_rank_curve(scenarios, CurveOrder::kGenerator);
  const auto oracle_path = cfg.output_dir / "curve_oracle.csv";
  const auto generator_path = cfg.output_dir / "curve_generator.csv";
  write_text_file(oracle_path, [&](std::ostream& os) { write_curve_csv(os, oracle, comment); });
  write_text_file(generator_path,
                  [&](std::ostream& os) { write_curve_csv(os, generator, comment); });
  out << "oracle curve: " << oracle_path.string() << " (" << oracle.size() << " ranks)\n"
      << "generator curve: " << generator_path.string() << " (" << generator.size() << " ranks)\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-turn query clarification simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<std::size_t> turns;
  std::optional<std::size_t> workers;
  std::optional<std::string> output;
  std::optional<std::string> scenarios;
  std::optional<std::string> embeddings;
  std::optional<std::string> model;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "Config file of key = value lines");
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--policy", policy, "naive, random, top2, random5, kmeans, all, or a comma list");
  app.add_option("--turns", turns, "Interaction turns T");
  app.add_option("--workers", workers, "Parallel simulation workers");
  app.add_option("--output", output, "Output directory");
  app.add_option("--scenarios", scenarios, "Scenario file (default <output>/scenarios.jsonl)");
  app.add_option("--embeddings", embeddings, "Embedding file (default <output>/collection.embv)");
  app.add_option("--model", model, "Model file (default <output>/model.rnk)");
  app.add_option("--set", overrides, "Override any config key: key=value");

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic scenario corpus");
  auto* trn = app.add_subcommand("train", "Train the pairwise query ranker");
  auto* sim = app.add_subcommand("simulate", "Run interactive sessions and write reports");
  auto* crv = app.add_subcommand("curve", "Export rank-effectiveness curves");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (policy) cfg.set("policy", *policy);
    if (turns) cfg.turns = *turns;
    if (workers) cfg.workers = *workers;
    if (output) cfg.output_dir = *output;
    if (scenarios) cfg.scenario_file = *scenarios;
    if (embeddings) cfg.embedding_file = *embeddings;
    if (model) cfg.model_file = *model;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ValidationError("--set expects key=value, got '" + kv + "'");
      }
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }

    if (gen->parsed()) cmd_gen_data(cfg, out);
    else if (trn->parsed()) cmd_train(cfg, out);
    else if (sim->parsed()) cmd_simulate(cfg, out);
    else if (crv->parsed()) cmd_curve(cfg, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace qclar::cli

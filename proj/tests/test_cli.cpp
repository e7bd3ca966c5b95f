#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "qclar/cli.hpp"
#include "qclar/errors.hpp"

using namespace qclar;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qclarify");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> small(const std::filesystem::path& dir) {
  return {"--output", dir.string(),
          "--set", "dim=6",
          "--set", "synthetic.num_scenarios=8",
          "--set", "synthetic.m=8",
          "--set", "synthetic.num_distractor_docs=4",
          "--set", "train.epochs=1",
          "--set", "train.pairs_per_scenario=16",
          "--set", "ranker.scorer_hidden=8",
          "--turns", "3"};
}

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<std::string> extra) {
  base.insert(base.begin(), extra.begin(), extra.end());
  return base;
}

}  // namespace

TEST_CASE("config parsing, precedence and digest") {
  auto cfg = parse_config_text("# comment\nseed = 5\nturns=3  # trailing\n\npolicy = top2,kmeans\n");
  CHECK(cfg.seed == 5);
  CHECK(cfg.turns == 3);
  CHECK(cfg.policies == std::vector<PolicyKind>{PolicyKind::kTop2, PolicyKind::kKMeans});
  CHECK(cfg.resolved_synthetic().seed == 5);
  CHECK(cfg.resolved_train().seed == 6);

  auto same = cfg;
  same.workers = 8;
  same.output_dir = "elsewhere";
  CHECK(same.digest() == cfg.digest());
  same.set("train.learning_rate", "0.001");
  CHECK(same.digest() != cfg.digest());
  CHECK(cfg.digest().size() == 16);

  CHECK_THROWS_AS(parse_config_text("nonsense\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("no.such.key = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("turns = many\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("ranker.encoding = fourier\n"), ValidationError);
  auto bad = cfg;
  bad.panel_size = 3;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("full pipeline through the command line") {
  const auto dir = fixture::scratch_dir("cli");
  const auto args = small(dir);
  auto r = run(with(args, {"gen-data"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(dir / "scenarios.jsonl"));
  CHECK(std::filesystem::exists(dir / "collection.embv"));

  r = run(with(args, {"train"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(dir / "model.rnk"));
  {
    std::ifstream log(dir / "train_log.csv");
    std::string line;
    std::getline(log, line);
    CHECK(line.rfind("# config_digest=", 0) == 0);
    std::getline(log, line);
    CHECK(line == "epoch,train_loss,heldout_pairwise_accuracy");
  }

  r = run(with(args, {"simulate", "--workers", "2"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("oracle bound: holds") != std::string::npos);
  for (const auto* name : {"report_naive.json", "report_kmeans.json", "report.md", "report.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }

  r = run(with(args, {"curve"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(dir / "curve_oracle.csv"));
  CHECK(std::filesystem::exists(dir / "curve_generator.csv"));
}

TEST_CASE("a config file is overridden by flags") {
  const auto dir = fixture::scratch_dir("cli-config");
  { std::ofstream(dir / "exp.cfg") << "synthetic.num_scenarios = 3\nsynthetic.m = 4\ndim = 4\nseed = 1\n"; }
  auto r = run({"--config", (dir / "exp.cfg").string(), "--output", (dir / "out").string(),
                "--set", "synthetic.num_scenarios=5", "gen-data"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("scenarios: 5") != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = fixture::scratch_dir("cli-errors");
  CHECK(run({}).code != 0);
  CHECK(run({"gen-data", "--set", "synthetic.m=1", "--output", dir.string()}).code == cli::kExitValidation);
  CHECK(run({"gen-data", "--set", "bogus"}).code == cli::kExitValidation);
  CHECK(run({"gen-data", "--policy", "nope"}).code == cli::kExitValidation);
  CHECK(run({"train", "--output", (dir / "missing").string()}).code == cli::kExitIo);
  CHECK(run({"simulate", "--config", (dir / "absent.cfg").string()}).code == cli::kExitIo);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-data") != std::string::npos);
}

#include "qclar/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qclar/errors.hpp"
#include "qclar/random.hpp"

namespace qclar {

using nlohmann::json;

void ClarificationScenario::validate() const {
  const auto fail = [&](const std::string& msg) {
    throw ValidationError("scenario '" + id + "': " + msg);
  };
  if (candidates.size() < 2) {
    fail("needs at least 2 candidates, has " + std::to_string(candidates.size()));
  }
  if (labels.size() != candidates.size()) {
    fail(std::to_string(candidates.size()) + " candidates but " + std::to_string(labels.size()) +
         " labels");
  }
  if (intent.embedding.dim() != q0.dim()) {
    fail("intent dim " + std::to_string(intent.embedding.dim()) + " vs q0 dim " +
         std::to_string(q0.dim()));
  }
  if (intent.judgments.size() == 0) {
    fail("no relevant documents");
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].dim() != q0.dim()) {
      fail("candidate " + std::to_string(i) + " dim " + std::to_string(candidates[i].dim()) +
           " vs q0 dim " + std::to_string(q0.dim()));
    }
  }
}

void SyntheticConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ValidationError("synthetic config: " + msg); };
  if (dim == 0) fail("dim must be positive");
  if (num_scenarios == 0) fail("num_scenarios must be positive");
  if (m < 2) fail("m must be >= 2");
  if (!(alignment_lo >= 0.0 && alignment_lo < alignment_hi && alignment_hi <= 1.0)) {
    fail("alignment range must satisfy 0 <= lo < hi <= 1");
  }
  if (!(initial_query_alignment >= 0.0 && initial_query_alignment <= 1.0)) {
    fail("initial_query_alignment must lie in [0, 1]");
  }
  if (cluster_count == 0) fail("cluster_count must be positive");
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread)) {
    fail("cluster_spread must be finite and non-negative");
  }
}

namespace {

Embedding random_unit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  for (;;) {
    for (auto& x : v) {
      x = gauss(rng);
    }
    double sq = 0.0;
    for (const double x : v) {
      sq += x * x;
    }
    if (sq > 1e-12) {
      return normalize(Embedding(v));
    }
  }
}

// normalize(a * x + (1 - a) * y)
Embedding blend(const Embedding& x, const Embedding& y, double a) {
  std::vector<double> v(x.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = a * x[i] + (1.0 - a) * y[i];
  }
  return normalize(Embedding(std::move(v)));
}

Embedding around(const Embedding& center, double spread, std::size_t dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, spread / std::sqrt(static_cast<double>(dim)));
  std::vector<double> v(center.values().begin(), center.values().end());
  for (auto& x : v) {
    x += gauss(rng);
  }
  return normalize(Embedding(std::move(v)));
}

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> alignment(cfg.alignment_lo, cfg.alignment_hi);
  std::uniform_int_distribution<std::size_t> pick_cluster(0, cfg.cluster_count - 1);

  SyntheticCorpus corpus{{}, DocumentCollection(cfg.dim)};
  const int width = cfg.num_scenarios > 10000 ? 6 : 4;

  std::optional<Embedding> shared_intent;
  if (cfg.separable) {
    shared_intent = round_to_f32(random_unit(cfg.dim, rng));
    corpus.collection.add("intent", *shared_intent);
  }

  corpus.scenarios.reserve(cfg.num_scenarios);
  for (std::size_t s = 0; s < cfg.num_scenarios; ++s) {
    ClarificationScenario sc;
    sc.id = padded("s", s, width);

    Embedding intent = shared_intent ? *shared_intent : round_to_f32(random_unit(cfg.dim, rng));
    std::string relevant_id = shared_intent ? "intent" : sc.id + "-rel";
    if (!shared_intent) {
      corpus.collection.add(relevant_id, intent);
    }
    for (std::size_t d = 0; d < cfg.num_distractor_docs; ++d) {
      corpus.collection.add(sc.id + padded("-d", d, 3), round_to_f32(random_unit(cfg.dim, rng)));
    }

    std::vector<Embedding> centers;
    centers.reserve(cfg.cluster_count);
    for (std::size_t c = 0; c < cfg.cluster_count; ++c) {
      centers.push_back(random_unit(cfg.dim, rng));
    }

    sc.q0 = round_to_f32(blend(intent, random_unit(cfg.dim, rng), cfg.initial_query_alignment));
    sc.candidates.reserve(cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i) {
      const double a = alignment(rng);
      const Embedding noise = around(centers[pick_cluster(rng)], cfg.cluster_spread, cfg.dim, rng);
      sc.candidates.push_back(round_to_f32(blend(intent, noise, a)));
    }
    sc.intent = Intent{std::move(intent), RelevanceJudgments({relevant_id})};
    corpus.scenarios.push_back(std::move(sc));
  }

  for (auto& sc : corpus.scenarios) {
    sc.labels.clear();
    for (const auto& c : sc.candidates) {
      if (cfg.separable) {
        const double y = std::clamp(0.5 * (1.0 + dot(c, sc.intent.embedding)), 0.0, 1.0);
        sc.labels.emplace_back(y);
      } else {
        sc.labels.push_back(effectiveness_label(c, corpus.collection, sc.intent.judgments));
      }
    }
  }
  return corpus;
}

std::vector<ClarificationScenario> relabel(std::vector<ClarificationScenario> scenarios,
                                           const DocumentCollection& coll, std::size_t k) {
  for (auto& sc : scenarios) {
    if (sc.dim() != coll.dim()) {
      throw ValidationError("scenario '" + sc.id + "' dim " + std::to_string(sc.dim()) +
                            " vs collection dim " + std::to_string(coll.dim()));
    }
    sc.labels.clear();
    for (const auto& c : sc.candidates) {
      sc.labels.push_back(effectiveness_label(c, coll, sc.intent.judgments, k));
    }
  }
  return scenarios;
}

void check_compatible(const std::vector<ClarificationScenario>& scenarios,
                      const DocumentCollection& coll) {
  for (const auto& sc : scenarios) {
    if (sc.dim() != coll.dim()) {
      throw ValidationError("scenario '" + sc.id + "' dim " + std::to_string(sc.dim()) +
                            " vs collection dim " + std::to_string(coll.dim()));
    }
    for (const auto& doc : sc.intent.judgments.relevant()) {
      if (!coll.find(doc)) {
        throw ValidationError("scenario '" + sc.id + "': relevant document '" + doc +
                              "' is not in the collection");
      }
    }
  }
}

namespace {

Embedding vector_field(const json& j, const DocumentCollection* lookup) {
  if (j.is_string()) {
    const auto ref = j.get<std::string>();
    if (lookup == nullptr) {
      throw ValidationError("embedding reference '" + ref + "' needs an embedding file");
    }
    const auto idx = lookup->find(ref);
    if (!idx) {
      throw ValidationError("embedding reference '" + ref + "' not found");
    }
    return lookup->embedding(*idx);
  }
  return Embedding(j.get<std::vector<double>>());
}

json to_json(const Embedding& e) { return json(std::vector<double>(e.values().begin(), e.values().end())); }

}  // namespace

std::vector<ClarificationScenario> load_scenarios(const std::filesystem::path& path,
                                                  const DocumentCollection* lookup) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open scenario file " + path.string());
  }
  std::vector<ClarificationScenario> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::string id = "<line " + std::to_string(line_no) + ">";
    try {
      const auto j = json::parse(line);
      if (j.contains("meta")) {
        continue;
      }
      id = j.at("id").get<std::string>();
      ClarificationScenario sc;
      sc.id = id;
      sc.q0 = vector_field(j.at("q0"), lookup);
      std::set<std::string> relevant;
      for (const auto& r : j.at("relevant_docs")) {
        relevant.insert(r.get<std::string>());
      }
      sc.intent = Intent{vector_field(j.at("intent"), lookup), RelevanceJudgments(std::move(relevant))};
      for (const auto& c : j.at("candidates")) {
        sc.candidates.push_back(vector_field(c, lookup));
      }
      for (const auto& l : j.at("labels")) {
        sc.labels.emplace_back(l.get<double>());
      }
      sc.validate();
      out.push_back(std::move(sc));
    } catch (const json::exception& e) {
      throw ValidationError("scenario '" + id + "': " + e.what());
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      if (msg.rfind("scenario '", 0) == 0) {
        throw;
      }
      throw ValidationError("scenario '" + id + "': " + msg);
    }
  }
  return out;
}

void save_scenarios(const std::vector<ClarificationScenario>& scenarios,
                    const std::filesystem::path& path, const std::string& config_digest) {
  std::ostringstream buf;
  if (!config_digest.empty()) {
    buf << json{{"meta", {{"config_digest", config_digest}, {"count", scenarios.size()}}}}.dump()
        << '\n';
  }
  for (const auto& sc : scenarios) {
    sc.validate();
    json j;
    j["id"] = sc.id;
    j["q0"] = to_json(sc.q0);
    j["intent"] = to_json(sc.intent.embedding);
    j["relevant_docs"] = std::vector<std::string>(sc.intent.judgments.relevant().begin(),
                                                  sc.intent.judgments.relevant().end());
    json cands = json::array();
    for (const auto& c : sc.candidates) {
      cands.push_back(to_json(c));
    }
    j["candidates"] = std::move(cands);
    std::vector<double> labels;
    for (const auto& l : sc.labels) {
      labels.push_back(l.value());
    }
    j["labels"] = labels;
    buf << j.dump() << '\n';
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write scenario file " + path.string());
  }
  out << buf.str();
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

}  // namespace qclar

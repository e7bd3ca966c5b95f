#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qclar/random.hpp"
#include "qclar/scenario.hpp"

namespace fixture {

inline qclar::Embedding random_unit(std::size_t dim, qclar::Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return qclar::normalize(qclar::Embedding(std::move(v)));
}

inline qclar::Embedding perturb(const qclar::Embedding& base, double sigma, qclar::Rng& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<double> v(base.values().begin(), base.values().end());
  for (auto& x : v) x += n(rng);
  return qclar::normalize(qclar::Embedding(std::move(v)));
}

inline std::string relevant_id(const std::string& scenario_id) { return scenario_id + "-rel"; }

// Random unit q0, intent and candidates; labels uniform in [0, 1].
inline qclar::ClarificationScenario random_scenario(const std::string& id, std::size_t m,
                                                    std::size_t dim, qclar::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  qclar::ClarificationScenario sc{
      id,
      random_unit(dim, rng),
      {random_unit(dim, rng), qclar::RelevanceJudgments({relevant_id(id)})},
      {},
      {}};
  for (std::size_t i = 0; i < m; ++i) {
    sc.candidates.push_back(random_unit(dim, rng));
    sc.labels.emplace_back(u(rng));
  }
  return sc;
}

// The relevant document of every scenario plus `extra` random documents.
inline qclar::DocumentCollection collection_for(const std::vector<qclar::ClarificationScenario>& scs,
                                                std::size_t extra, qclar::Rng& rng) {
  qclar::DocumentCollection coll(scs.front().dim());
  for (const auto& sc : scs) coll.add(relevant_id(sc.id), sc.intent.embedding);
  for (std::size_t i = 0; i < extra; ++i) {
    coll.add("noise-" + std::to_string(i), random_unit(coll.dim(), rng));
  }
  return coll;
}

struct TwoBlock {
  qclar::ClarificationScenario scenario;
  std::vector<bool> on_intent;  // per candidate
};

// Half the candidates hug the intent direction, half hug an orthogonal one.
// Every on-intent candidate is closer to the intent than every off-intent one.
inline TwoBlock two_block_scenario(const std::string& id, std::size_t m, std::size_t dim,
                                   qclar::Rng& rng) {
  const auto intent = random_unit(dim, rng);
  auto other = random_unit(dim, rng);
  {
    const double c = qclar::dot(other, intent);
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = other[i] - c * intent[i];
    other = qclar::normalize(qclar::Embedding(std::move(v)));
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  TwoBlock out{{id, perturb(intent, 0.5, rng),
                {intent, qclar::RelevanceJudgments({relevant_id(id)})}, {}, {}},
               std::vector<bool>(m)};
  out.scenario.candidates.resize(m, intent);
  out.scenario.labels.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t slot = order[j];
    const bool near = j < m / 2;
    out.on_intent[slot] = near;
    out.scenario.candidates[slot] = perturb(near ? intent : other, 0.05, rng);
    out.scenario.labels[slot] = qclar::EffectivenessLabel(near ? 1.0 : 0.0);
  }
  return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qclar-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture

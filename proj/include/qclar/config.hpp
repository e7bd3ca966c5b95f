#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qclar/policies.hpp"
#include "qclar/ranker.hpp"
#include "qclar/scenario.hpp"

namespace qclar {

// Everything one experiment needs. Serialized as flat "key = value" lines;
// see ExperimentConfig::set for the key list.
struct ExperimentConfig {
  std::optional<std::filesystem::path> scenario_file;
  std::optional<std::filesystem::path> embedding_file;
  std::optional<std::filesystem::path> model_file;
  std::filesystem::path output_dir = "out";

  std::uint64_t seed = 42;
  std::optional<std::uint64_t> synthetic_seed;  // defaults to seed
  std::optional<std::uint64_t> train_seed;      // defaults to seed + 1

  SyntheticConfig synthetic;
  RankerShape ranker;
  TrainConfig train;

  std::vector<PolicyKind> policies = all_policy_kinds();
  std::size_t turns = 5;
  std::size_t panel_size = 2;
  std::size_t cutoff = 10;
  std::size_t workers = 1;
  double user_flip_probability = 0.0;
  bool include_traces = false;

  // Applies one key. Throws ValidationError on an unknown key or a bad value.
  void set(std::string_view key, std::string_view value);

  // Effective sub-configs with seeds and shared dims filled in.
  SyntheticConfig resolved_synthetic() const;
  TrainConfig resolved_train() const;

  std::filesystem::path scenarios_path() const;
  std::filesystem::path embeddings_path() const;
  std::filesystem::path model_path() const;

  void validate() const;

  // Canonical text of every setting that influences results (no paths, no worker count).
  std::string canonical_text() const;
  // FNV-1a of canonical_text(), 16 hex digits.
  std::string digest() const;
};

// Parses "key = value" lines (# comments, blank lines allowed) on top of `base`.
ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace qclar

#include "qclar/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qclar/errors.hpp"
#include "qclar/random.hpp"

namespace qclar {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ValidationError("config key '" + std::string(key) + "': invalid value '" +
                        std::string(value) + "'");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(std::string_view key, std::string_view v) {
  // std::from_chars for double is missing from older libstdc++.
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::vector<std::string_view> split_commas(std::string_view v) {
  std::vector<std::string_view> parts;
  while (!v.empty()) {
    const auto comma = v.find(',');
    parts.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return parts;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "scenarios") scenario_file = std::filesystem::path(std::string(v));
  else if (key == "embeddings") embedding_file = std::filesystem::path(std::string(v));
  else if (key == "model") model_file = std::filesystem::path(std::string(v));
  else if (key == "output") output_dir = std::filesystem::path(std::string(v));
  else if (key == "seed") seed = to_u64(key, v);
  else if (key == "dim") { synthetic.dim = to_size(key, v); ranker.dim = synthetic.dim; }
  else if (key == "turns") turns = to_size(key, v);
  else if (key == "panel_size") panel_size = to_size(key, v);
  else if (key == "cutoff") cutoff = to_size(key, v);
  else if (key == "workers") workers = to_size(key, v);
  else if (key == "user.flip_probability") user_flip_probability = to_double(key, v);
  else if (key == "report.traces") include_traces = to_bool(key, v);
  else if (key == "policy") {
    policies.clear();
    for (const auto part : split_commas(v)) {
      if (part == "all") {
        policies = all_policy_kinds();
        break;
      }
      policies.push_back(parse_policy_kind(part));
    }
    if (policies.empty()) bad_value(key, v);
  }
  else if (key == "synthetic.num_scenarios") synthetic.num_scenarios = to_size(key, v);
  else if (key == "synthetic.m") synthetic.m = to_size(key, v);
  else if (key == "synthetic.num_distractor_docs") synthetic.num_distractor_docs = to_size(key, v);
  else if (key == "synthetic.alignment_lo") synthetic.alignment_lo = to_double(key, v);
  else if (key == "synthetic.alignment_hi") synthetic.alignment_hi = to_double(key, v);
  else if (key == "synthetic.initial_query_alignment") synthetic.initial_query_alignment = to_double(key, v);
  else if (key == "synthetic.cluster_count") synthetic.cluster_count = to_size(key, v);
  else if (key == "synthetic.cluster_spread") synthetic.cluster_spread = to_double(key, v);
  else if (key == "synthetic.separable") synthetic.separable = to_bool(key, v);
  else if (key == "synthetic.seed") synthetic_seed = to_u64(key, v);
  else if (key == "ranker.inner_hidden") ranker.inner_hidden = to_size(key, v);
  else if (key == "ranker.outer_hidden") ranker.outer_hidden = to_size(key, v);
  else if (key == "ranker.scorer_hidden") {
    ranker.scorer_hidden.clear();
    for (const auto part : split_commas(v)) {
      if (!part.empty()) ranker.scorer_hidden.push_back(to_size(key, part));
    }
  }
  else if (key == "ranker.encoding") {
    if (v == "cos_sin") ranker.encoding = FeedbackEncoding::kCosSin;
    else if (v == "identity") ranker.encoding = FeedbackEncoding::kIdentity;
    else bad_value(key, v);
  }
  else if (key == "train.batch_size") train.batch_size = to_size(key, v);
  else if (key == "train.learning_rate") train.learning_rate = to_double(key, v);
  else if (key == "train.adam_beta1") train.adam_beta1 = to_double(key, v);
  else if (key == "train.adam_beta2") train.adam_beta2 = to_double(key, v);
  else if (key == "train.adam_epsilon") train.adam_epsilon = to_double(key, v);
  else if (key == "train.weight_decay") train.weight_decay = to_double(key, v);
  else if (key == "train.dropout_p") train.dropout_p = to_double(key, v);
  else if (key == "train.epochs") train.epochs = to_size(key, v);
  else if (key == "train.seed") train_seed = to_u64(key, v);
  else if (key == "train.pairs_per_scenario") train.pairs_per_scenario = to_size(key, v);
  else if (key == "train.max_history_turns") train.max_history_turns = to_size(key, v);
  else if (key == "train.holdout_fraction") train.holdout_fraction = to_double(key, v);
  else throw ValidationError("unknown config key '" + std::string(key) + "'");
}

SyntheticConfig ExperimentConfig::resolved_synthetic() const {
  SyntheticConfig s = synthetic;
  s.seed = synthetic_seed.value_or(seed);
  return s;
}

TrainConfig ExperimentConfig::resolved_train() const {
  TrainConfig t = train;
  t.seed = train_seed.value_or(seed + 1);
  return t;
}

std::filesystem::path ExperimentConfig::scenarios_path() const {
  return scenario_file.value_or(output_dir / "scenarios.jsonl");
}

std::filesystem::path ExperimentConfig::embeddings_path() const {
  return embedding_file.value_or(output_dir / "collection.embv");
}

std::filesystem::path ExperimentConfig::model_path() const {
  return model_file.value_or(output_dir / "model.rnk");
}

void ExperimentConfig::validate() const {
  if (panel_size != 2) {
    throw ValidationError("panel_size must be 2; only pairwise panels are supported");
  }
  if (cutoff == 0) throw ValidationError("cutoff must be >= 1");
  if (workers == 0) throw ValidationError("workers must be >= 1");
  if (!(user_flip_probability >= 0.0 && user_flip_probability <= 1.0)) {
    throw ValidationError("user.flip_probability must lie in [0, 1]");
  }
  if (policies.empty()) throw ValidationError("at least one policy is required");
  resolved_synthetic().validate();
  resolved_train().validate();
  ranker.validate();
}

std::string ExperimentConfig::canonical_text() const {
  const SyntheticConfig s = resolved_synthetic();
  const TrainConfig t = resolved_train();
  std::ostringstream out;
  out << "seed=" << seed << '\n'
      << "turns=" << turns << '\n'
      << "panel_size=" << panel_size << '\n'
      << "cutoff=" << cutoff << '\n'
      << "user.flip_probability=" << fmt_double(user_flip_probability) << '\n';
  out << "policy=";
  for (std::size_t i = 0; i < policies.size(); ++i) {
    out << (i ? "," : "") << policy_name(policies[i]);
  }
  out << '\n';
  out << "synthetic.dim=" << s.dim << '\n'
      << "synthetic.num_scenarios=" << s.num_scenarios << '\n'
      << "synthetic.m=" << s.m << '\n'
      << "synthetic.num_distractor_docs=" << s.num_distractor_docs << '\n'
      << "synthetic.alignment_lo=" << fmt_double(s.alignment_lo) << '\n'
      << "synthetic.alignment_hi=" << fmt_double(s.alignment_hi) << '\n'
      << "synthetic.initial_query_alignment=" << fmt_double(s.initial_query_alignment) << '\n'
      << "synthetic.cluster_count=" << s.cluster_count << '\n'
      << "synthetic.cluster_spread=" << fmt_double(s.cluster_spread) << '\n'
      << "synthetic.separable=" << (s.separable ? "true" : "false") << '\n'
      << "synthetic.seed=" << s.seed << '\n';
  out << "ranker.inner_hidden=" << ranker.inner_hidden << '\n'
      << "ranker.outer_hidden=" << ranker.outer_hidden << '\n'
      << "ranker.scorer_hidden=";
  for (std::size_t i = 0; i < ranker.scorer_hidden.size(); ++i) {
    out << (i ? "," : "") << ranker.scorer_hidden[i];
  }
  out << '\n'
      << "ranker.encoding="
      << (ranker.encoding == FeedbackEncoding::kCosSin ? "cos_sin" : "identity") << '\n';
  out << "train.batch_size=" << t.batch_size << '\n'
      << "train.learning_rate=" << fmt_double(t.learning_rate) << '\n'
      << "train.adam_beta1=" << fmt_double(t.adam_beta1) << '\n'
      << "train.adam_beta2=" << fmt_double(t.adam_beta2) << '\n'
      << "train.adam_epsilon=" << fmt_double(t.adam_epsilon) << '\n'
      << "train.weight_decay=" << fmt_double(t.weight_decay) << '\n'
      << "train.dropout_p=" << fmt_double(t.dropout_p) << '\n'
      << "train.epochs=" << t.epochs << '\n'
      << "train.seed=" << t.seed << '\n'
      << "train.pairs_per_scenario=" << t.pairs_per_scenario << '\n'
      << "train.max_history_turns=" << t.max_history_turns << '\n'
      << "train.holdout_fraction=" << fmt_double(t.holdout_fraction) << '\n';
  return out.str();
}

std::string ExperimentConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

}  // namespace qclar

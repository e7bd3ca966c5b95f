#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qclar/embedding_store.hpp"
#include "qclar/random.hpp"
#include "qclar/scenario.hpp"
#include "qclar/user_agent.hpp"

namespace qclar {

// Feedback turns in temporal order, oldest first.
struct InteractionHistory {
  std::vector<FeedbackTurn> turns;

  std::size_t size() const { return turns.size(); }
  bool empty() const { return turns.empty(); }
  void append(FeedbackTurn turn) { turns.push_back(std::move(turn)); }

  bool operator==(const InteractionHistory&) const = default;
};

// How q+ and q- are mapped before the per-turn recurrence.
enum class FeedbackEncoding : std::uint32_t {
  kCosSin = 0,    // elementwise cos(q+), sin(q-)
  kIdentity = 1,  // raw embeddings
};

struct RankerShape {
  std::size_t dim = 32;
  std::size_t inner_hidden = 16;  // per-turn recurrent state
  std::size_t outer_hidden = 16;  // across-turn recurrent state (history context)
  std::vector<std::size_t> scorer_hidden{64, 32};
  FeedbackEncoding encoding = FeedbackEncoding::kCosSin;

  std::size_t scorer_input() const { return 2 * dim + outer_hidden; }
  void validate() const;

  bool operator==(const RankerShape&) const = default;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;
  double dropout_p = 0.3;
  std::size_t epochs = 10;
  std::uint64_t seed = 7;
  // Ordered (better, worse) pairs drawn per scenario and epoch.
  std::size_t pairs_per_scenario = 256;
  // Training histories are greedy-user rollouts of 0..max_history_turns turns.
  std::size_t max_history_turns = 5;
  // Fraction of scenarios held out for the pairwise-accuracy log.
  double holdout_fraction = 0.2;

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// Parameters of the history-conditioned pairwise scorer, stored as one flat
// vector. Layout, in order:
//   inner.Wx [H1 x D]   inner.Wh [H1 x H1]   inner.b [H1]
//   outer.Wx [H2 x H1]  outer.Wh [H2 x H2]   outer.b [H2]
//   scorer.l<k>.W [out x in]  scorer.l<k>.b [out]   for each hidden layer, then the scalar output
// All matrices are row-major. The embedding half of the scorer input is
// standardized by a fixed per-feature affine map that is not trained.
class RankerModel {
 public:
  struct Group {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;

    bool operator==(const Group&) const = default;
  };

  // All-zero parameters, identity standardization.
  explicit RankerModel(RankerShape shape);

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
  static RankerModel random(RankerShape shape, std::uint64_t seed);

  const RankerShape& shape() const { return shape_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<Group>& groups() const { return groups_; }
  const Group& group(const std::string& name) const;

  std::span<const double> feature_mean() const { return feature_mean_; }
  std::span<const double> feature_scale() const { return feature_scale_; }
  void set_standardization(std::vector<double> mean, std::vector<double> scale);

  // Provenance recorded in the model file.
  const TrainConfig& train_config() const { return train_config_; }
  void set_train_config(const TrainConfig& cfg) { train_config_ = cfg; }
  std::uint64_t config_digest() const { return config_digest_; }
  void set_config_digest(std::uint64_t digest) { config_digest_ = digest; }

  bool operator==(const RankerModel&) const = default;

 private:
  RankerShape shape_;
  std::vector<Group> groups_;
  std::vector<double> params_;
  std::vector<double> feature_mean_;
  std::vector<double> feature_scale_;
  TrainConfig train_config_;
  std::uint64_t config_digest_ = 0;
};

// Per-layer dropout multipliers for one scorer pass: 0 or 1/(1-p) per hidden unit.
// An empty mask means no dropout.
struct DropoutMask {
  std::vector<std::vector<double>> layers;
};

DropoutMask sample_dropout_mask(const RankerShape& shape, double p, Rng& rng);

// The two feature vectors fed to the per-turn recurrence.
std::pair<std::vector<double>, std::vector<double>> encode_feedback_inputs(
    const FeedbackTurn& turn, FeedbackEncoding encoding);

// Final inner hidden state after consuming [enc(q+), enc(q-)]. Length H1.
std::vector<double> encode_turn(const FeedbackTurn& turn, const RankerModel& model);

// Final outer hidden state over the encoded turns; zero vector for an empty history. Length H2.
std::vector<double> encode_history(const InteractionHistory& history, const RankerModel& model);

// Scorer on [standardize(q0) || standardize(candidate) || encode_history(history)].
// Train mode draws a fresh dropout mask from `dropout_rng`; eval mode is deterministic.
double score(const Embedding& q0, const Embedding& candidate, const InteractionHistory& history,
             const RankerModel& model, bool train_mode = false, Rng* dropout_rng = nullptr);

// Scorer given a precomputed history context; `mask` may be empty.
double score_with_context(const Embedding& q0, const Embedding& candidate,
                          std::span<const double> context, const RankerModel& model,
                          const DropoutMask& mask = {});

// P(candidate i beats candidate j) = sigmoid(s_i - s_j). P(a,b) + P(b,a) == 1 exactly.
double pairwise_prob(double s_i, double s_j);

// `remaining` sorted by descending eval-mode score, ties by ascending index.
std::vector<std::size_t> rank_candidates(const ClarificationScenario& scenario,
                                         std::span<const std::size_t> remaining,
                                         const InteractionHistory& history,
                                         const RankerModel& model);

// One supervised comparison: `preferred` has the higher effectiveness label.
struct PairSample {
  Embedding q0;
  InteractionHistory history;
  Embedding preferred;
  Embedding other;
};

struct PairDropout {
  DropoutMask preferred;
  DropoutMask other;
};

// -log sigmoid(s_preferred - s_other).
double pair_loss(const RankerModel& model, const PairSample& sample,
                 const PairDropout& dropout = {});

// Same loss; adds d loss / d parameters into `grad` (length = parameter count).
double pair_loss_and_gradient(const RankerModel& model, const PairSample& sample,
                              std::span<double> grad, const PairDropout& dropout = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::vector<std::pair<std::string, double>> per_group;  // max relative error per group
  bool passed = false;
};

// Analytic gradient vs central differences for every parameter. The relative
// error of one coordinate is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(const RankerModel& model, const PairSample& sample,
                                   double tolerance = 1e-4, const PairDropout& dropout = {},
                                   double step = 1e-4);

struct EpochLog {
  std::size_t epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;
  double heldout_accuracy = 0.0;
};

struct TrainResult {
  RankerModel model;
  std::vector<EpochLog> log;
};

// Ordered (better, worse) candidate index pairs of one scenario.
std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(const ClarificationScenario& sc);

// Fraction of ordered pairs the model scores strictly in the right order, empty history.
double pairwise_accuracy(const RankerModel& model,
                         std::span<const ClarificationScenario> scenarios);

// Pairwise logistic training with AdamW and dropout; deterministic in cfg.seed.
// Throws ValidationError when no scenario has two distinct labels.
TrainResult train(std::span<const ClarificationScenario> scenarios, const RankerShape& shape,
                  const TrainConfig& cfg);

inline constexpr std::string_view kModelMagic = "RNKV1\n";

void save_model(const RankerModel& model, const std::filesystem::path& path);
RankerModel load_model(const std::filesystem::path& path);

}  // namespace qclar

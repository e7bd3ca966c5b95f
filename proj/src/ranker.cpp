#include "qclar/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qclar/errors.hpp"

namespace qclar {

void RankerShape::validate() const {
  if (dim == 0 || inner_hidden == 0 || outer_hidden == 0) {
    throw ValidationError("ranker dims must be positive");
  }
  for (const auto w : scorer_hidden) {
    if (w == 0) {
      throw ValidationError("scorer hidden widths must be positive");
    }
  }
  if (encoding != FeedbackEncoding::kCosSin && encoding != FeedbackEncoding::kIdentity) {
    throw ValidationError("unknown feedback encoding");
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("adam_epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ValidationError("dropout_p must lie in [0, 1)");
  if (pairs_per_scenario == 0) throw ValidationError("pairs_per_scenario must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("holdout_fraction must lie in [0, 1)");
  }
}

namespace {

struct DenseLayer {
  std::size_t w = 0;  // offset of the [out x in] weight matrix
  std::size_t b = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct Layout {
  std::size_t dim = 0, h1 = 0, h2 = 0;
  std::size_t inner_wx = 0, inner_wh = 0, inner_b = 0;
  std::size_t outer_wx = 0, outer_wh = 0, outer_b = 0;
  std::vector<DenseLayer> scorer;  // hidden layers then the scalar output layer
  std::size_t total = 0;
};

Layout layout_of(const RankerShape& shape) {
  Layout l;
  l.dim = shape.dim;
  l.h1 = shape.inner_hidden;
  l.h2 = shape.outer_hidden;
  std::size_t off = 0;
  const auto take = [&off](std::size_t n) {
    const std::size_t at = off;
    off += n;
    return at;
  };
  l.inner_wx = take(l.h1 * l.dim);
  l.inner_wh = take(l.h1 * l.h1);
  l.inner_b = take(l.h1);
  l.outer_wx = take(l.h2 * l.h1);
  l.outer_wh = take(l.h2 * l.h2);
  l.outer_b = take(l.h2);
  std::size_t in = shape.scorer_input();
  for (const auto width : shape.scorer_hidden) {
    DenseLayer d;
    d.in = in;
    d.out = width;
    d.w = take(width * in);
    d.b = take(width);
    l.scorer.push_back(d);
    in = width;
  }
  DenseLayer out;
  out.in = in;
  out.out = 1;
  out.w = take(in);
  out.b = take(1);
  l.scorer.push_back(out);
  l.total = off;
  return l;
}

// y += W x with W row-major [rows x cols] starting at w.
void gemv_acc(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      acc += row[c] * x[c];
    }
    y[r] += acc;
  }
}

// dx += W^T dy
void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* dy, double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const double g = dy[r];
    if (g == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      dx[c] += row[c] * g;
    }
  }
}

// dW += dy x^T
void outer_acc(double* dw, std::size_t rows, std::size_t cols, const double* dy, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    double* row = dw + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] += g * x[c];
    }
  }
}

void tanh_inplace(std::vector<double>& v) {
  for (auto& x : v) x = std::tanh(x);
}

void check_dim(const Embedding& e, std::size_t dim, const char* what) {
  if (e.dim() != dim) {
    throw ValidationError(std::string(what) + " dim " + std::to_string(e.dim()) +
                          " vs model dim " + std::to_string(dim));
  }
}

struct TurnTape {
  std::vector<double> x1, x2;  // encoded q+, q-
  std::vector<double> h1, h2;  // inner states after each step
};

struct HistoryTape {
  std::vector<TurnTape> turns;
  std::vector<std::vector<double>> g;  // outer state after each turn
  std::vector<double> context;         // last outer state, or zeros
};

TurnTape forward_turn(const FeedbackTurn& turn, const RankerModel& model, const Layout& l) {
  check_dim(turn.selected, l.dim, "feedback q+");
  check_dim(turn.rejected, l.dim, "feedback q-");
  const double* p = model.parameters().data();
  TurnTape t;
  std::tie(t.x1, t.x2) = encode_feedback_inputs(turn, model.shape().encoding);
  t.h1.assign(p + l.inner_b, p + l.inner_b + l.h1);
  gemv_acc(p + l.inner_wx, l.h1, l.dim, t.x1.data(), t.h1.data());
  tanh_inplace(t.h1);
  t.h2.assign(p + l.inner_b, p + l.inner_b + l.h1);
  gemv_acc(p + l.inner_wx, l.h1, l.dim, t.x2.data(), t.h2.data());
  gemv_acc(p + l.inner_wh, l.h1, l.h1, t.h1.data(), t.h2.data());
  tanh_inplace(t.h2);
  return t;
}

HistoryTape forward_history(const InteractionHistory& history, const RankerModel& model,
                            const Layout& l) {
  const double* p = model.parameters().data();
  HistoryTape tape;
  tape.turns.reserve(history.size());
  for (const auto& turn : history.turns) {
    tape.turns.push_back(forward_turn(turn, model, l));
  }
  std::vector<double> prev(l.h2, 0.0);
  for (std::size_t t = 0; t < tape.turns.size(); ++t) {
    std::vector<double> g(p + l.outer_b, p + l.outer_b + l.h2);
    gemv_acc(p + l.outer_wx, l.h2, l.h1, tape.turns[t].h2.data(), g.data());
    if (t > 0) {
      gemv_acc(p + l.outer_wh, l.h2, l.h2, prev.data(), g.data());
    }
    tanh_inplace(g);
    prev = g;
    tape.g.push_back(std::move(g));
  }
  tape.context = tape.g.empty() ? std::vector<double>(l.h2, 0.0) : tape.g.back();
  return tape;
}

void backward_history(const HistoryTape& tape, std::span<const double> dcontext,
                      const RankerModel& model, const Layout& l, double* grad) {
  const std::size_t n = tape.turns.size();
  if (n == 0) return;
  const double* p = model.parameters().data();
  std::vector<double> dg(dcontext.begin(), dcontext.end());
  std::vector<double> da(l.h2), de(l.h1), dz2(l.h1), dh1(l.h1), dz1(l.h1);
  for (std::size_t t = n; t-- > 0;) {
    const auto& g = tape.g[t];
    for (std::size_t i = 0; i < l.h2; ++i) da[i] = dg[i] * (1.0 - g[i] * g[i]);
    const auto& turn = tape.turns[t];
    outer_acc(grad + l.outer_wx, l.h2, l.h1, da.data(), turn.h2.data());
    if (t > 0) {
      outer_acc(grad + l.outer_wh, l.h2, l.h2, da.data(), tape.g[t - 1].data());
    }
    for (std::size_t i = 0; i < l.h2; ++i) grad[l.outer_b + i] += da[i];
    std::fill(de.begin(), de.end(), 0.0);
    gemv_t_acc(p + l.outer_wx, l.h2, l.h1, da.data(), de.data());
    std::fill(dg.begin(), dg.end(), 0.0);
    if (t > 0) {
      gemv_t_acc(p + l.outer_wh, l.h2, l.h2, da.data(), dg.data());
    }

    // inner recurrence of this turn, two steps from a zero state
    for (std::size_t i = 0; i < l.h1; ++i) dz2[i] = de[i] * (1.0 - turn.h2[i] * turn.h2[i]);
    outer_acc(grad + l.inner_wx, l.h1, l.dim, dz2.data(), turn.x2.data());
    outer_acc(grad + l.inner_wh, l.h1, l.h1, dz2.data(), turn.h1.data());
    for (std::size_t i = 0; i < l.h1; ++i) grad[l.inner_b + i] += dz2[i];
    std::fill(dh1.begin(), dh1.end(), 0.0);
    gemv_t_acc(p + l.inner_wh, l.h1, l.h1, dz2.data(), dh1.data());
    for (std::size_t i = 0; i < l.h1; ++i) dz1[i] = dh1[i] * (1.0 - turn.h1[i] * turn.h1[i]);
    outer_acc(grad + l.inner_wx, l.h1, l.dim, dz1.data(), turn.x1.data());
    for (std::size_t i = 0; i < l.h1; ++i) grad[l.inner_b + i] += dz1[i];
  }
}

struct ScorerTape {
  std::vector<std::vector<double>> inputs;     // input of each layer; inputs[0] is the scorer input
  std::vector<std::vector<double>> activated;  // tanh output of each hidden layer, before dropout
  double score = 0.0;
};

std::vector<double> scorer_input(const Embedding& q0, const Embedding& candidate,
                                 std::span<const double> context, const RankerModel& model,
                                 const Layout& l) {
  check_dim(q0, l.dim, "q0");
  check_dim(candidate, l.dim, "candidate");
  if (context.size() != l.h2) {
    throw ValidationError("history context length " + std::to_string(context.size()) +
                          " vs model outer dim " + std::to_string(l.h2));
  }
  const auto mean = model.feature_mean();
  const auto scale = model.feature_scale();
  std::vector<double> z(2 * l.dim + l.h2);
  for (std::size_t k = 0; k < l.dim; ++k) {
    z[k] = (q0[k] - mean[k]) * scale[k];
    z[l.dim + k] = (candidate[k] - mean[l.dim + k]) * scale[l.dim + k];
  }
  std::copy(context.begin(), context.end(), z.begin() + static_cast<std::ptrdiff_t>(2 * l.dim));
  return z;
}

ScorerTape forward_scorer(std::vector<double> input, const RankerModel& model, const Layout& l,
                          const DropoutMask& mask) {
  const double* p = model.parameters().data();
  const std::size_t hidden = l.scorer.size() - 1;
  if (!mask.layers.empty() && mask.layers.size() != hidden) {
    throw ValidationError("dropout mask has " + std::to_string(mask.layers.size()) +
                          " layers, scorer has " + std::to_string(hidden));
  }
  ScorerTape tape;
  tape.inputs.push_back(std::move(input));
  for (std::size_t k = 0; k < hidden; ++k) {
    const auto& layer = l.scorer[k];
    std::vector<double> a(p + layer.b, p + layer.b + layer.out);
    gemv_acc(p + layer.w, layer.out, layer.in, tape.inputs.back().data(), a.data());
    tanh_inplace(a);
    std::vector<double> next = a;
    if (!mask.layers.empty()) {
      const auto& m = mask.layers[k];
      if (m.size() != layer.out) {
        throw ValidationError("dropout mask width mismatch at layer " + std::to_string(k));
      }
      for (std::size_t i = 0; i < next.size(); ++i) next[i] *= m[i];
    }
    tape.activated.push_back(std::move(a));
    tape.inputs.push_back(std::move(next));
  }
  const auto& out = l.scorer.back();
  double s = p[out.b];
  gemv_acc(p + out.w, 1, out.in, tape.inputs.back().data(), &s);
  tape.score = s;
  return tape;
}

// Adds d/dparams of (dscore * score) into grad; returns d/dcontext.
std::vector<double> backward_scorer(const ScorerTape& tape, double dscore, const RankerModel& model,
                                    const Layout& l, const DropoutMask& mask, double* grad) {
  const double* p = model.parameters().data();
  const std::size_t hidden = l.scorer.size() - 1;
  const auto& out = l.scorer.back();
  outer_acc(grad + out.w, 1, out.in, &dscore, tape.inputs.back().data());
  grad[out.b] += dscore;
  std::vector<double> dnext(out.in, 0.0);
  gemv_t_acc(p + out.w, 1, out.in, &dscore, dnext.data());
  for (std::size_t k = hidden; k-- > 0;) {
    const auto& layer = l.scorer[k];
    const auto& a = tape.activated[k];
    std::vector<double> du(layer.out);
    for (std::size_t i = 0; i < layer.out; ++i) {
      const double m = mask.layers.empty() ? 1.0 : mask.layers[k][i];
      du[i] = dnext[i] * m * (1.0 - a[i] * a[i]);
    }
    outer_acc(grad + layer.w, layer.out, layer.in, du.data(), tape.inputs[k].data());
    for (std::size_t i = 0; i < layer.out; ++i) grad[layer.b + i] += du[i];
    dnext.assign(layer.in, 0.0);
    gemv_t_acc(p + layer.w, layer.out, layer.in, du.data(), dnext.data());
  }
  return std::vector<double>(dnext.begin() + static_cast<std::ptrdiff_t>(2 * l.dim), dnext.end());
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

RankerModel::RankerModel(RankerShape shape) : shape_(std::move(shape)) {
  shape_.validate();
  const Layout l = layout_of(shape_);
  groups_ = {
      {"inner.Wx", l.inner_wx, l.h1 * l.dim},  {"inner.Wh", l.inner_wh, l.h1 * l.h1},
      {"inner.b", l.inner_b, l.h1},            {"outer.Wx", l.outer_wx, l.h2 * l.h1},
      {"outer.Wh", l.outer_wh, l.h2 * l.h2},   {"outer.b", l.outer_b, l.h2},
  };
  for (std::size_t k = 0; k < l.scorer.size(); ++k) {
    const auto& d = l.scorer[k];
    const std::string name =
        k + 1 == l.scorer.size() ? std::string("scorer.out") : "scorer.l" + std::to_string(k);
    groups_.push_back({name + ".W", d.w, d.out * d.in});
    groups_.push_back({name + ".b", d.b, d.out});
  }
  params_.assign(l.total, 0.0);
  feature_mean_.assign(2 * shape_.dim, 0.0);
  feature_scale_.assign(2 * shape_.dim, 1.0);
}

RankerModel RankerModel::random(RankerShape shape, std::uint64_t seed) {
  RankerModel model(std::move(shape));
  const Layout l = layout_of(model.shape_);
  Rng rng(seed);
  auto fill = [&](std::size_t offset, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) model.params_[offset + i] = u(rng);
  };
  // Recurrent cells see input and previous state together.
  fill(l.inner_wx, l.h1 * l.dim, l.dim + l.h1);
  fill(l.inner_wh, l.h1 * l.h1, l.dim + l.h1);
  fill(l.inner_b, l.h1, l.dim + l.h1);
  fill(l.outer_wx, l.h2 * l.h1, l.h1 + l.h2);
  fill(l.outer_wh, l.h2 * l.h2, l.h1 + l.h2);
  fill(l.outer_b, l.h2, l.h1 + l.h2);
  for (const auto& d : l.scorer) {
    fill(d.w, d.out * d.in, d.in);
    fill(d.b, d.out, d.in);
  }
  return model;
}

const RankerModel::Group& RankerModel::group(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw ValidationError("no parameter group named " + name);
}

void RankerModel::set_standardization(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != 2 * shape_.dim || scale.size() != 2 * shape_.dim) {
    throw ValidationError("standardization needs " + std::to_string(2 * shape_.dim) + " features");
  }
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!std::isfinite(mean[i]) || !std::isfinite(scale[i])) {
      throw ValidationError("standardization values must be finite");
    }
  }
  feature_mean_ = std::move(mean);
  feature_scale_ = std::move(scale);
}

DropoutMask sample_dropout_mask(const RankerShape& shape, double p, Rng& rng) {
  DropoutMask mask;
  if (p <= 0.0) return mask;
  std::bernoulli_distribution drop(p);
  const double keep_scale = 1.0 / (1.0 - p);
  for (const auto width : shape.scorer_hidden) {
    std::vector<double> layer(width);
    for (auto& m : layer) m = drop(rng) ? 0.0 : keep_scale;
    mask.layers.push_back(std::move(layer));
  }
  return mask;
}

std::pair<std::vector<double>, std::vector<double>> encode_feedback_inputs(
    const FeedbackTurn& turn, FeedbackEncoding encoding) {
  std::vector<double> pos(turn.selected.values().begin(), turn.selected.values().end());
  std::vector<double> neg(turn.rejected.values().begin(), turn.rejected.values().end());
  if (encoding == FeedbackEncoding::kCosSin) {
    for (auto& x : pos) x = std::cos(x);
    for (auto& x : neg) x = std::sin(x);
  }
  return {std::move(pos), std::move(neg)};
}

std::vector<double> encode_turn(const FeedbackTurn& turn, const RankerModel& model) {
  return forward_turn(turn, model, layout_of(model.shape())).h2;
}

std::vector<double> encode_history(const InteractionHistory& history, const RankerModel& model) {
  return forward_history(history, model, layout_of(model.shape())).context;
}

double score_with_context(const Embedding& q0, const Embedding& candidate,
                          std::span<const double> context, const RankerModel& model,
                          const DropoutMask& mask) {
  const Layout l = layout_of(model.shape());
  return forward_scorer(scorer_input(q0, candidate, context, model, l), model, l, mask).score;
}

double score(const Embedding& q0, const Embedding& candidate, const InteractionHistory& history,
             const RankerModel& model, bool train_mode, Rng* dropout_rng) {
  const auto context = encode_history(history, model);
  DropoutMask mask;
  if (train_mode) {
    if (dropout_rng == nullptr) {
      throw ValidationError("train-mode scoring needs a dropout RNG");
    }
    mask = sample_dropout_mask(model.shape(), model.train_config().dropout_p, *dropout_rng);
  }
  return score_with_context(q0, candidate, context, model, mask);
}

double pairwise_prob(double s_i, double s_j) {
  const double d = s_i - s_j;
  if (d >= 0.0) {
    return 1.0 / (1.0 + std::exp(-d));
  }
  return 1.0 - 1.0 / (1.0 + std::exp(d));
}

std::vector<std::size_t> rank_candidates(const ClarificationScenario& scenario,
                                         std::span<const std::size_t> remaining,
                                         const InteractionHistory& history,
                                         const RankerModel& model) {
  if (remaining.empty()) {
    throw ValidationError("rank_candidates: no remaining candidates in scenario '" + scenario.id + "'");
  }
  const auto context = encode_history(history, model);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(remaining.size());
  for (const auto idx : remaining) {
    if (idx >= scenario.size()) {
      throw ValidationError("candidate index " + std::to_string(idx) + " out of range");
    }
    scored.emplace_back(score_with_context(scenario.q0, scenario.candidates[idx], context, model),
                        idx);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> order;
  order.reserve(scored.size());
  for (const auto& [s, idx] : scored) order.push_back(idx);
  return order;
}

double pair_loss(const RankerModel& model, const PairSample& sample, const PairDropout& dropout) {
  const Layout l = layout_of(model.shape());
  const auto hist = forward_history(sample.history, model, l);
  const double sp =
      forward_scorer(scorer_input(sample.q0, sample.preferred, hist.context, model, l), model, l,
                     dropout.preferred)
          .score;
  const double so =
      forward_scorer(scorer_input(sample.q0, sample.other, hist.context, model, l), model, l,
                     dropout.other)
          .score;
  return softplus(-(sp - so));
}

double pair_loss_and_gradient(const RankerModel& model, const PairSample& sample,
                              std::span<double> grad, const PairDropout& dropout) {
  const Layout l = layout_of(model.shape());
  if (grad.size() != l.total) {
    throw ValidationError("gradient buffer has " + std::to_string(grad.size()) +
                          " entries, model has " + std::to_string(l.total));
  }
  const auto hist = forward_history(sample.history, model, l);
  const auto tp = forward_scorer(scorer_input(sample.q0, sample.preferred, hist.context, model, l),
                                 model, l, dropout.preferred);
  const auto to = forward_scorer(scorer_input(sample.q0, sample.other, hist.context, model, l),
                                 model, l, dropout.other);
  const double d = tp.score - to.score;
  // d/dd softplus(-d) = -sigmoid(-d)
  const double coeff = 1.0 - pairwise_prob(tp.score, to.score);
  auto dctx = backward_scorer(tp, -coeff, model, l, dropout.preferred, grad.data());
  const auto dctx_other = backward_scorer(to, coeff, model, l, dropout.other, grad.data());
  for (std::size_t i = 0; i < dctx.size(); ++i) dctx[i] += dctx_other[i];
  backward_history(hist, dctx, model, l, grad.data());
  return softplus(-d);
}

GradientCheckResult gradient_check(const RankerModel& model, const PairSample& sample,
                                   double tolerance, const PairDropout& dropout, double step) {
  std::vector<double> analytic(model.parameters().size(), 0.0);
  pair_loss_and_gradient(model, sample, analytic, dropout);
  RankerModel probe = model;
  auto params = probe.parameters();
  GradientCheckResult result;
  for (const auto& g : model.groups()) {
    double worst = 0.0;
    for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = pair_loss(probe, sample, dropout);
      params[i] = saved - step;
      const double down = pair_loss(probe, sample, dropout);
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    result.per_group.emplace_back(g.name, worst);
    result.max_relative_error = std::max(result.max_relative_error, worst);
  }
  result.passed = result.max_relative_error < tolerance;
  return result;
}

std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(const ClarificationScenario& sc) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < sc.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < sc.labels.size(); ++j) {
      if (sc.labels[i] > sc.labels[j]) {
        pairs.emplace_back(i, j);
      } else if (sc.labels[j] > sc.labels[i]) {
        pairs.emplace_back(j, i);
      }
    }
  }
  return pairs;
}

double pairwise_accuracy(const RankerModel& model,
                         std::span<const ClarificationScenario> scenarios) {
  std::size_t correct = 0;
  std::size_t total = 0;
  const std::vector<double> context(model.shape().outer_hidden, 0.0);
  for (const auto& sc : scenarios) {
    std::vector<double> scores;
    scores.reserve(sc.size());
    for (const auto& c : sc.candidates) {
      scores.push_back(score_with_context(sc.q0, c, context, model));
    }
    for (const auto& [better, worse] : ordered_pairs(sc)) {
      ++total;
      if (scores[better] > scores[worse]) ++correct;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

// Greedy-user rollout with the current model, presenting two candidates drawn
// from its top five each turn.
InteractionHistory rollout(const ClarificationScenario& sc, std::size_t turns,
                           const RankerModel& model, Rng& rng) {
  InteractionHistory history;
  std::vector<std::size_t> all(sc.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t t = 0; t < turns; ++t) {
    const auto ranked = rank_candidates(sc, all, history, model);
    const std::size_t pool = std::min<std::size_t>(5, ranked.size());
    std::uniform_int_distribution<std::size_t> first(0, pool - 1);
    std::uniform_int_distribution<std::size_t> second(0, pool - 2);
    const std::size_t a = first(rng);
    std::size_t b = second(rng);
    if (b >= a) ++b;
    const std::size_t ia = ranked[a];
    const std::size_t ib = ranked[b];
    history.append(select({ia, sc.candidates[ia]}, {ib, sc.candidates[ib]}, sc.intent));
  }
  return history;
}

double mean_loss(const RankerModel& model, std::span<const PairSample> samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += pair_loss(model, s);
  return sum / static_cast<double>(samples.size());
}

}  // namespace

TrainResult train(std::span<const ClarificationScenario> scenarios, const RankerShape& shape,
                  const TrainConfig& cfg) {
  cfg.validate();
  shape.validate();
  for (const auto& sc : scenarios) {
    sc.validate();
    if (sc.dim() != shape.dim) {
      throw ValidationError("scenario '" + sc.id + "' dim " + std::to_string(sc.dim()) +
                            " vs ranker dim " + std::to_string(shape.dim));
    }
  }

  std::vector<std::size_t> order(scenarios.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(cfg.seed, 1));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_holdout =
      static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(scenarios.size()));
  std::vector<ClarificationScenario> heldout;
  std::vector<std::size_t> train_idx;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k < n_holdout) {
      heldout.push_back(scenarios[order[k]]);
    } else {
      train_idx.push_back(order[k]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(scenarios.size());
  std::size_t total_pairs = 0;
  for (const auto s : train_idx) {
    pairs[s] = ordered_pairs(scenarios[s]);
    total_pairs += pairs[s].size();
  }
  if (total_pairs == 0) {
    throw ValidationError("no trainable pairs: every training scenario has uniform labels");
  }

  RankerModel model = RankerModel::random(shape, derive_seed(cfg.seed, 2));
  model.set_train_config(cfg);

  // Frozen per-feature standardization of the q0 and candidate inputs.
  {
    const std::size_t d = shape.dim;
    std::vector<double> sum(2 * d, 0.0), sq(2 * d, 0.0);
    std::size_t nq = 0, nc = 0;
    for (const auto s : train_idx) {
      const auto& sc = scenarios[s];
      for (std::size_t k = 0; k < d; ++k) {
        sum[k] += sc.q0[k];
        sq[k] += sc.q0[k] * sc.q0[k];
      }
      ++nq;
      for (const auto& c : sc.candidates) {
        for (std::size_t k = 0; k < d; ++k) {
          sum[d + k] += c[k];
          sq[d + k] += c[k] * c[k];
        }
        ++nc;
      }
    }
    std::vector<double> mean(2 * d), scale(2 * d);
    for (std::size_t k = 0; k < 2 * d; ++k) {
      const double n = static_cast<double>(k < d ? nq : nc);
      mean[k] = sum[k] / n;
      const double var = std::max(0.0, sq[k] / n - mean[k] * mean[k]);
      const double sd = std::sqrt(var);
      scale[k] = sd > 1e-8 ? 1.0 / sd : 1.0;
    }
    model.set_standardization(std::move(mean), std::move(scale));
  }

  std::vector<PairSample> monitor;
  {
    Rng mon_rng(derive_seed(cfg.seed, 4));
    for (const auto s : train_idx) {
      auto p = pairs[s];
      std::shuffle(p.begin(), p.end(), mon_rng);
      const std::size_t n = std::min<std::size_t>(64, p.size());
      const auto& sc = scenarios[s];
      for (std::size_t k = 0; k < n; ++k) {
        monitor.push_back({sc.q0, {}, sc.candidates[p[k].first], sc.candidates[p[k].second]});
      }
    }
  }
  const std::vector<ClarificationScenario> train_view = [&] {
    std::vector<ClarificationScenario> v;
    for (const auto s : train_idx) v.push_back(scenarios[s]);
    return v;
  }();
  const std::span<const ClarificationScenario> accuracy_set =
      heldout.empty() ? std::span<const ClarificationScenario>(train_view)
                      : std::span<const ClarificationScenario>(heldout);

  TrainResult result{model, {}};
  result.log.push_back({0, mean_loss(model, monitor), pairwise_accuracy(model, accuracy_set)});

  Rng rng(derive_seed(cfg.seed, 3));
  const std::size_t n_params = model.parameters().size();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0), grad(n_params, 0.0);
  std::uint64_t step = 0;

  struct SampleRef {
    std::size_t history = 0;
    std::size_t scenario = 0;
    std::size_t better = 0;
    std::size_t worse = 0;
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<InteractionHistory> histories;
    std::vector<SampleRef> samples;
    std::uniform_int_distribution<std::size_t> turns_dist(0, cfg.max_history_turns);
    for (const auto s : train_idx) {
      if (pairs[s].empty()) continue;
      const std::size_t h = histories.size();
      histories.push_back(rollout(scenarios[s], turns_dist(rng), model, rng));
      auto& p = pairs[s];
      const std::size_t take = std::min(cfg.pairs_per_scenario, p.size());
      for (std::size_t k = 0; k < take; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, p.size() - 1);
        std::swap(p[k], p[pick(rng)]);
        samples.push_back({h, s, p[k].first, p[k].second});
      }
    }
    std::shuffle(samples.begin(), samples.end(), rng);

    for (std::size_t begin = 0; begin < samples.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(samples.size(), begin + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const auto& ref = samples[k];
        const auto& sc = scenarios[ref.scenario];
        const PairSample sample{sc.q0, histories[ref.history], sc.candidates[ref.better],
                                sc.candidates[ref.worse]};
        PairDropout dropout{sample_dropout_mask(shape, cfg.dropout_p, rng),
                            sample_dropout_mask(shape, cfg.dropout_p, rng)};
        pair_loss_and_gradient(model, sample, grad, dropout);
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      auto params = model.parameters();
      for (std::size_t i = 0; i < n_params; ++i) {
        const double g = grad[i] * inv;
        m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * g;
        m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * g * g;
        params[i] *= 1.0 - cfg.learning_rate * cfg.weight_decay;
        params[i] -= cfg.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + cfg.adam_epsilon);
      }
    }
    result.log.push_back({epoch, mean_loss(model, monitor), pairwise_accuracy(model, accuracy_set)});
  }
  result.model = std::move(model);
  return result;
}

}  // namespace qclar

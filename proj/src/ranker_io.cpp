#include <cmath>
#include <fstream>
#include <sstream>

#include "qclar/binary_io.hpp"
#include "qclar/errors.hpp"
#include "qclar/ranker.hpp"

// Model file, all integers and floats little-endian:
//   "RNKV1\n"
//   u32 dim, u32 inner_hidden, u32 outer_hidden, u32 encoding
//   u32 n_hidden, then n_hidden x u32 scorer widths
//   u64 batch_size, f64 learning_rate, f64 beta1, f64 beta2, f64 epsilon,
//   f64 weight_decay, f64 dropout_p, u64 epochs, u64 seed,
//   u64 pairs_per_scenario, u64 max_history_turns, f64 holdout_fraction
//   u64 config_digest
//   u64 parameter count
//   f64 feature_mean[2 * dim], f64 feature_scale[2 * dim]
//   f64 parameters[count]   (order documented on RankerModel)

namespace qclar {

void save_model(const RankerModel& model, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  const auto& shape = model.shape();
  const auto& cfg = model.train_config();
  binio::write_magic(buf, kModelMagic);
  binio::write_u32(buf, static_cast<std::uint32_t>(shape.dim));
  binio::write_u32(buf, static_cast<std::uint32_t>(shape.inner_hidden));
  binio::write_u32(buf, static_cast<std::uint32_t>(shape.outer_hidden));
  binio::write_u32(buf, static_cast<std::uint32_t>(shape.encoding));
  binio::write_u32(buf, static_cast<std::uint32_t>(shape.scorer_hidden.size()));
  for (const auto w : shape.scorer_hidden) {
    binio::write_u32(buf, static_cast<std::uint32_t>(w));
  }
  binio::write_u64(buf, cfg.batch_size);
  binio::write_f64(buf, cfg.learning_rate);
  binio::write_f64(buf, cfg.adam_beta1);
  binio::write_f64(buf, cfg.adam_beta2);
  binio::write_f64(buf, cfg.adam_epsilon);
  binio::write_f64(buf, cfg.weight_decay);
  binio::write_f64(buf, cfg.dropout_p);
  binio::write_u64(buf, cfg.epochs);
  binio::write_u64(buf, cfg.seed);
  binio::write_u64(buf, cfg.pairs_per_scenario);
  binio::write_u64(buf, cfg.max_history_turns);
  binio::write_f64(buf, cfg.holdout_fraction);
  binio::write_u64(buf, model.config_digest());
  binio::write_u64(buf, model.parameters().size());
  for (const double v : model.feature_mean()) binio::write_f64(buf, v);
  for (const double v : model.feature_scale()) binio::write_f64(buf, v);
  for (const double v : model.parameters()) binio::write_f64(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write model file " + path.string());
  }
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

RankerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model file " + path.string());
  }
  if (!binio::read_magic(in, kModelMagic)) {
    throw ValidationError("model file " + path.string() + " has a bad magic header");
  }
  RankerShape shape;
  shape.dim = binio::read_u32(in, "dim");
  shape.inner_hidden = binio::read_u32(in, "inner_hidden");
  shape.outer_hidden = binio::read_u32(in, "outer_hidden");
  const std::uint32_t encoding = binio::read_u32(in, "encoding");
  if (encoding > static_cast<std::uint32_t>(FeedbackEncoding::kIdentity)) {
    throw ValidationError("model header: unknown feedback encoding " + std::to_string(encoding));
  }
  shape.encoding = static_cast<FeedbackEncoding>(encoding);
  const std::uint32_t n_hidden = binio::read_u32(in, "scorer depth");
  if (n_hidden > 64) {
    throw ValidationError("model header: implausible scorer depth " + std::to_string(n_hidden));
  }
  shape.scorer_hidden.clear();
  for (std::uint32_t k = 0; k < n_hidden; ++k) {
    shape.scorer_hidden.push_back(binio::read_u32(in, "scorer width"));
  }
  constexpr std::uint32_t kMaxWidth = 1U << 16;
  if (shape.dim > kMaxWidth || shape.inner_hidden > kMaxWidth || shape.outer_hidden > kMaxWidth) {
    throw ValidationError("model header: implausible dimensions");
  }
  for (const auto w : shape.scorer_hidden) {
    if (w > kMaxWidth) throw ValidationError("model header: implausible scorer width");
  }
  TrainConfig cfg;
  cfg.batch_size = binio::read_u64(in, "batch_size");
  cfg.learning_rate = binio::read_f64(in, "learning_rate");
  cfg.adam_beta1 = binio::read_f64(in, "adam_beta1");
  cfg.adam_beta2 = binio::read_f64(in, "adam_beta2");
  cfg.adam_epsilon = binio::read_f64(in, "adam_epsilon");
  cfg.weight_decay = binio::read_f64(in, "weight_decay");
  cfg.dropout_p = binio::read_f64(in, "dropout_p");
  cfg.epochs = binio::read_u64(in, "epochs");
  cfg.seed = binio::read_u64(in, "seed");
  cfg.pairs_per_scenario = binio::read_u64(in, "pairs_per_scenario");
  cfg.max_history_turns = binio::read_u64(in, "max_history_turns");
  cfg.holdout_fraction = binio::read_f64(in, "holdout_fraction");
  const std::uint64_t digest = binio::read_u64(in, "config digest");
  const std::uint64_t count = binio::read_u64(in, "parameter count");

  RankerModel model(shape);
  if (count != model.parameters().size()) {
    throw ValidationError("model header dims imply " + std::to_string(model.parameters().size()) +
                          " parameters, file declares " + std::to_string(count));
  }
  std::vector<double> mean(2 * shape.dim), scale(2 * shape.dim);
  for (auto& v : mean) v = binio::read_f64(in, "feature mean");
  for (auto& v : scale) v = binio::read_f64(in, "feature scale");
  model.set_standardization(std::move(mean), std::move(scale));
  for (auto& v : model.parameters()) {
    v = binio::read_f64(in, "parameters");
    if (!std::isfinite(v)) {
      throw ValidationError("model file contains a non-finite parameter");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after model parameters");
  }
  model.set_train_config(cfg);
  model.set_config_digest(digest);
  return model;
}

}  // namespace qclar

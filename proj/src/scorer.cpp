#include "aesadv/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aesadv/checksum.hpp"
#include "aesadv/error.hpp"
#include "aesadv/kernels.hpp"
#include "aesadv/metrics.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

namespace {

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

FeatureVector featurize(const Essay& essay, const TokenizedEssay& tokens, const EmbeddingBackend& embedder) {
  std::vector<std::string> texts;
  for (const auto& s : tokens.sentences) texts.push_back(essay.text.substr(s.begin, s.end - s.begin));
  if (texts.empty()) texts.push_back(essay.text);
  const auto vectors = embedder.embed(texts);
  validate_embeddings(vectors, texts.size());

  const std::size_t d = vectors.front().size();
  FeatureVector f(d + kSurfaceFeatures, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t k = 0; k < d; ++k) f[k] += v[k];
  }
  for (std::size_t k = 0; k < d; ++k) f[k] /= static_cast<double>(vectors.size());

  std::size_t n_tokens = 0;
  std::size_t n_chars = 0;
  std::set<std::string> types;
  for (const auto& s : tokens.sentences) {
    for (const auto& t : s.tokens) {
      ++n_tokens;
      n_chars += code_points(t.text);
      types.insert(lowercase(t.text));
    }
  }
  f[d] = std::log(static_cast<double>(std::max<std::size_t>(n_tokens, 1)));
  f[d + 1] = std::log(static_cast<double>(std::max<std::size_t>(tokens.sentences.size(), 1)));
  f[d + 2] = n_tokens ? static_cast<double>(types.size()) / static_cast<double>(n_tokens) : 0.0;
  f[d + 3] = n_tokens ? static_cast<double>(n_chars) / static_cast<double>(n_tokens) : 0.0;
  return f;
}

FeatureVector featurize(const Essay& essay, const EmbeddingBackend& embedder) {
  return featurize(essay, tokenize(essay), embedder);
}

std::vector<FeatureVector> featurize_all(const Corpus& corpus, const EmbeddingBackend& embedder, bool parallel) {
  std::vector<FeatureVector> out(corpus.size());
  kernels::for_each_index(parallel, corpus.size(),
                          [&](std::size_t i) { out[i] = featurize(corpus.essays()[i], embedder); });
  return out;
}

double mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw InvariantViolation("mse: length mismatch");
  if (predictions.empty()) throw InvariantViolation("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> state,
                  const RmsPropConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.size()) {
    throw InvariantViolation("rmsprop: parameter, gradient and state shapes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    state[i] = cfg.decay * state[i] + (1.0 - cfg.decay) * grads[i] * grads[i];
    params[i] -= cfg.learning_rate * grads[i] / std::sqrt(state[i] + cfg.epsilon);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(decay > 0.0) || decay >= 1.0) throw ConfigError("rmsprop decay must be in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("rmsprop epsilon must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (hidden < 1) throw ConfigError("hidden size must be >= 1");
}

ScorerParams::ScorerParams(std::size_t inputs, std::size_t hidden)
    : inputs_(inputs), hidden_(hidden), values_(count(inputs, hidden), 0.0) {}

ScorerParams init_params(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  ScorerParams p(inputs, hidden);
  Rng rng(seed);
  auto v = p.values();
  const double limit1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
  for (std::size_t i = 0; i < hidden * inputs; ++i) v[i] = (2.0 * rng.uniform() - 1.0) * limit1;
  const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (std::size_t i = 0; i < hidden; ++i) v[hidden * (inputs + 1) + i] = (2.0 * rng.uniform() - 1.0) * limit2;
  return p;
}

double forward(const ScorerParams& params, std::span<const double> x) {
  const std::size_t h = params.hidden();
  const std::size_t in = params.inputs();
  const auto w1 = params.w1();
  const auto b1 = params.b1();
  const auto w2 = params.w2();
  double out = params.b2();
  for (std::size_t j = 0; j < h; ++j) {
    double z = b1[j];
    for (std::size_t k = 0; k < in; ++k) z += w1[j * in + k] * x[k];
    out += w2[j] * std::tanh(z);
  }
  return out;
}

double loss_and_gradient(const ScorerParams& params, std::span<const double> inputs, std::span<const double> targets,
                         std::span<double> grad) {
  const std::size_t h = params.hidden();
  const std::size_t in = params.inputs();
  const std::size_t rows = targets.size();
  if (inputs.size() != rows * in || grad.size() != params.values().size() || rows == 0) {
    throw InvariantViolation("loss_and_gradient: inconsistent shapes");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> hidden(rows * h);
  kernels::dense_tanh_serial(inputs, rows, in, params.w1(), params.b1(), hidden);

  const auto w2 = params.w2();
  double* g_w1 = grad.data();
  double* g_b1 = grad.data() + h * in;
  double* g_w2 = grad.data() + h * (in + 1);
  double& g_b2 = grad.back();
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* a = hidden.data() + r * h;
    double out = params.b2();
    for (std::size_t j = 0; j < h; ++j) out += w2[j] * a[j];
    const double err = out - targets[r];
    loss += err * err * inv;
    const double d_out = 2.0 * err * inv;
    g_b2 += d_out;
    const double* x = inputs.data() + r * in;
    for (std::size_t j = 0; j < h; ++j) {
      g_w2[j] += d_out * a[j];
      const double dz = d_out * w2[j] * (1.0 - a[j] * a[j]);
      g_b1[j] += dz;
      for (std::size_t k = 0; k < in; ++k) g_w1[j * in + k] += dz * x[k];
    }
  }
  return loss;
}

std::vector<double> ScorerModel::standardize(const FeatureVector& f) const {
  if (f.size() != feature_mean.size()) {
    throw InvariantViolation("feature dimension " + std::to_string(f.size()) + " does not match model dimension " +
                             std::to_string(feature_mean.size()));
  }
  std::vector<double> x(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) x[k] = (f[k] - feature_mean[k]) / feature_scale[k];
  return x;
}

double ScorerModel::raw_output(const FeatureVector& f) const { return forward(params, standardize(f)); }

int ScorerModel::score_from_raw(double raw) const {
  if (!std::isfinite(raw)) raw = 0.0;
  const double span = static_cast<double>(scale.max_score - scale.min_score);
  const double denorm = std::clamp(raw, -1.0, 2.0) * span + static_cast<double>(scale.min_score);
  const auto rounded = static_cast<int>(std::floor(denorm + 0.5));
  return std::clamp(rounded, scale.min_score, scale.max_score);
}

int predict(const ScorerModel& model, const Essay& essay, const EmbeddingBackend& embedder) {
  return model.predict(featurize(essay, embedder));
}

std::vector<int> predict_all(const ScorerModel& model, const Corpus& corpus, const EmbeddingBackend& embedder,
                             bool parallel) {
  std::vector<int> out(corpus.size());
  kernels::for_each_index(parallel, corpus.size(),
                          [&](std::size_t i) { out[i] = predict(model, corpus.essays()[i], embedder); });
  return out;
}

namespace {

std::vector<double> stack(const ScorerModel& model, const std::vector<FeatureVector>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * model.feature_mean.size());
  for (const auto& f : rows) {
    const auto x = model.standardize(f);
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

std::vector<double> normalized_targets(const std::vector<int>& y, const ScoreScale& scale) {
  const double span = static_cast<double>(scale.max_score - scale.min_score);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = static_cast<double>(y[i] - scale.min_score) / span;
  return t;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainResult train_on_features(const std::vector<FeatureVector>& train_x, const std::vector<int>& train_y,
                              const std::vector<FeatureVector>& val_x, const std::vector<int>& val_y,
                              const ScoreScale& scale, const TrainConfig& cfg) {
  cfg.validate();
  scale.validate();
  if (train_x.empty() || val_x.empty()) throw DataError("training needs non-empty train and validation sets");
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw InvariantViolation("feature and label counts differ");
  }
  const std::size_t dim = train_x.front().size();

  ScorerModel model;
  model.config = cfg;
  model.scale = scale;
  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 0.0);
  for (const auto& f : train_x) {
    if (f.size() != dim) throw InvariantViolation("feature rows differ in dimension");
    for (std::size_t k = 0; k < dim; ++k) model.feature_mean[k] += f[k];
  }
  for (auto& m : model.feature_mean) m /= static_cast<double>(train_x.size());
  for (const auto& f : train_x) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = f[k] - model.feature_mean[k];
      model.feature_scale[k] += d * d;
    }
  }
  for (auto& s : model.feature_scale) {
    s = std::sqrt(s / static_cast<double>(train_x.size()));
    if (s < 1e-12) s = 1.0;
  }
  model.params = init_params(dim, cfg.hidden, cfg.seed);

  const auto inputs = stack(model, train_x);
  const auto targets = normalized_targets(train_y, scale);
  const auto val_inputs = stack(model, val_x);
  const std::size_t n = train_x.size();
  const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size >= n) ? n : cfg.batch_size;

  std::vector<double> grad(model.params.values().size());
  std::vector<double> state(grad.size(), 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> batch_x;
  std::vector<double> batch_t;
  std::vector<int> val_pred(val_x.size());

  TrainResult result;
  double best_qwk = -std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (batch < n) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(std::span<std::size_t>(order));
    }
    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const std::size_t stop = std::min(n, start + batch);
      batch_x.clear();
      batch_t.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch_x.insert(batch_x.end(), inputs.begin() + static_cast<std::ptrdiff_t>(order[i] * dim),
                       inputs.begin() + static_cast<std::ptrdiff_t>((order[i] + 1) * dim));
        batch_t.push_back(targets[order[i]]);
      }
      loss_and_gradient(model.params, batch_x, batch_t, grad);
      if (!all_finite(grad)) {
        throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                            " (rows " + std::to_string(start) + ".." + std::to_string(stop - 1) + ")");
      }
      rmsprop_step(model.params.values(), grad, state, cfg.rmsprop());
    }
    std::vector<double> outputs(n);
    for (std::size_t i = 0; i < n; ++i) {
      outputs[i] = forward(model.params, std::span(inputs).subspan(i * dim, dim));
    }
    const double loss = mse(outputs, targets);
    if (!std::isfinite(loss)) throw TrainingError("training diverged at epoch " + std::to_string(epoch));
    for (std::size_t i = 0; i < val_x.size(); ++i) {
      val_pred[i] = model.score_from_raw(forward(model.params, std::span(val_inputs).subspan(i * dim, dim)));
    }
    const double kappa = qwk(val_y, val_pred, scale);
    result.history.push_back({epoch, loss, kappa});
    if (kappa > best_qwk) {
      best_qwk = kappa;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

TrainResult train(const Corpus& train_set, const Corpus& val_set, const TrainConfig& cfg,
                  const EmbeddingBackend& embedder) {
  if (train_set.empty() || val_set.empty()) throw DataError("training needs non-empty train and validation sets");
  const auto prompts = train_set.prompts();
  if (prompts.size() != 1 || val_set.prompts() != prompts) {
    throw DataError("train and validation sets must share exactly one prompt");
  }
  const ScoreScale scale = train_set.scale(prompts.front());
  if (!(val_set.scale(prompts.front()) == scale)) throw DataError("train and validation scales differ");
  std::vector<int> train_y;
  std::vector<int> val_y;
  for (const auto& e : train_set.essays()) train_y.push_back(e.gold_score);
  for (const auto& e : val_set.essays()) val_y.push_back(e.gold_score);
  return train_on_features(featurize_all(train_set, embedder), train_y, featurize_all(val_set, embedder), val_y, scale,
                           cfg);
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json checkpoint_body(const ScorerModel& m) {
  const auto& c = m.config;
  return {{"config",
           {{"learning_rate", c.learning_rate},
            {"decay", c.decay},
            {"epsilon", c.epsilon},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"hidden", c.hidden}}},
          {"scale", {{"prompt_id", m.scale.prompt_id}, {"min_score", m.scale.min_score}, {"max_score", m.scale.max_score}}},
          {"feature_dim", m.params.inputs()},
          {"params",
           {{"w1", std::vector<double>(m.params.w1().begin(), m.params.w1().end())},
            {"b1", std::vector<double>(m.params.b1().begin(), m.params.b1().end())},
            {"w2", std::vector<double>(m.params.w2().begin(), m.params.w2().end())},
            {"b2", m.params.b2()}}},
          {"feature_mean", m.feature_mean},
          {"feature_scale", m.feature_scale}};
}

}  // namespace

nlohmann::json checkpoint_to_json(const ScorerModel& model) {
  auto j = checkpoint_body(model);
  j["checksum"] = checksum_hex(j.dump());
  return j;
}

ScorerModel checkpoint_from_json(const nlohmann::json& j) {
  try {
    ScorerModel m;
    const auto& c = j.at("config");
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.decay = c.at("decay").get<double>();
    m.config.epsilon = c.at("epsilon").get<double>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.batch_size = c.at("batch_size").get<std::size_t>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.hidden = c.at("hidden").get<std::size_t>();
    const auto& s = j.at("scale");
    m.scale = {s.at("prompt_id").get<int>(), s.at("min_score").get<int>(), s.at("max_score").get<int>()};
    m.scale.validate();
    const auto dim = j.at("feature_dim").get<std::size_t>();
    m.params = ScorerParams(dim, m.config.hidden);
    const auto& p = j.at("params");
    const auto w1 = p.at("w1").get<std::vector<double>>();
    const auto b1 = p.at("b1").get<std::vector<double>>();
    const auto w2 = p.at("w2").get<std::vector<double>>();
    if (w1.size() != dim * m.config.hidden || b1.size() != m.config.hidden || w2.size() != m.config.hidden) {
      throw DataError("checkpoint parameter shapes do not match config");
    }
    auto v = m.params.values();
    std::copy(w1.begin(), w1.end(), v.begin());
    std::copy(b1.begin(), b1.end(), v.begin() + static_cast<std::ptrdiff_t>(w1.size()));
    std::copy(w2.begin(), w2.end(), v.begin() + static_cast<std::ptrdiff_t>(w1.size() + b1.size()));
    v.back() = p.at("b2").get<double>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_scale = j.at("feature_scale").get<std::vector<double>>();
    if (m.feature_mean.size() != dim || m.feature_scale.size() != dim) {
      throw DataError("checkpoint feature normalisation has wrong dimension");
    }
    if (j.contains("checksum") && j.at("checksum").get<std::string>() != checksum_hex(checkpoint_body(m).dump())) {
      throw DataError("checkpoint checksum mismatch");
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed checkpoint: ") + ex.what());
  }
}

}  // namespace aesadv

#pragma once

// Reference essay scorer: mean sentence embedding plus four surface
// features, one tanh hidden layer, linear output, MSE loss and RMSProp.

#include <span>
#include <vector>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"
#include "json.hpp"

namespace aesadv {

inline constexpr std::size_t kSurfaceFeatures = 4;

using FeatureVector = std::vector<double>;

// [mean sentence embedding (d), log token count, log sentence count,
//  type/token ratio, mean word length in code points]
FeatureVector featurize(const Essay& essay, const TokenizedEssay& tokens, const EmbeddingBackend& embedder);
FeatureVector featurize(const Essay& essay, const EmbeddingBackend& embedder);
std::vector<FeatureVector> featurize_all(const Corpus& corpus, const EmbeddingBackend& embedder, bool parallel = true);

double mse(std::span<const double> predictions, std::span<const double> targets);

struct RmsPropConfig {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;
};

// state = decay * state + (1 - decay) * g^2
// param -= learning_rate * g / sqrt(state + epsilon)
void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> state,
                  const RmsPropConfig& cfg);

struct TrainConfig {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;
  int epochs = 200;
  std::size_t batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;
  std::size_t hidden = 16;

  void validate() const;
  RmsPropConfig rmsprop() const { return {learning_rate, decay, epsilon}; }
};

// Flat parameter vector laid out as [W1 (h x in), b1 (h), w2 (h), b2].
class ScorerParams {
 public:
  ScorerParams() = default;
  ScorerParams(std::size_t inputs, std::size_t hidden);

  std::size_t inputs() const { return inputs_; }
  std::size_t hidden() const { return hidden_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<const double> w1() const { return {values_.data(), hidden_ * inputs_}; }
  std::span<const double> b1() const { return {values_.data() + hidden_ * inputs_, hidden_}; }
  std::span<const double> w2() const { return {values_.data() + hidden_ * (inputs_ + 1), hidden_}; }
  double b2() const { return values_.back(); }

  static std::size_t count(std::size_t inputs, std::size_t hidden) { return hidden * (inputs + 2) + 1; }

 private:
  std::size_t inputs_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> values_;
};

// Glorot-uniform weights, zero biases.
ScorerParams init_params(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

// Output for one already-standardised input row.
double forward(const ScorerParams& params, std::span<const double> x);

// Mean squared error over the rows of `inputs` (row-major, params.inputs()
// columns) and its gradient with respect to every parameter.
double loss_and_gradient(const ScorerParams& params, std::span<const double> inputs, std::span<const double> targets,
                         std::span<double> grad);

struct ScorerModel {
  TrainConfig config;
  ScoreScale scale;
  ScorerParams params;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;

  std::vector<double> standardize(const FeatureVector& f) const;
  double raw_output(const FeatureVector& f) const;
  // Denormalise, round half up, clamp to the scale.
  int score_from_raw(double raw) const;
  int predict(const FeatureVector& f) const { return score_from_raw(raw_output(f)); }
};

int predict(const ScorerModel& model, const Essay& essay, const EmbeddingBackend& embedder);
std::vector<int> predict_all(const ScorerModel& model, const Corpus& corpus, const EmbeddingBackend& embedder,
                             bool parallel = true);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double val_qwk = 0.0;
};

struct TrainResult {
  ScorerModel model;  // parameters of the best-validation-QWK epoch
  int best_epoch = 0;
  std::vector<EpochRecord> history;
};

// Targets are min-max normalised over the scale. Validation QWK is taken
// after every epoch; the earliest epoch with the highest QWK wins.
TrainResult train(const Corpus& train_set, const Corpus& val_set, const TrainConfig& cfg,
                  const EmbeddingBackend& embedder);
TrainResult train_on_features(const std::vector<FeatureVector>& train_x, const std::vector<int>& train_y,
                              const std::vector<FeatureVector>& val_x, const std::vector<int>& val_y,
                              const ScoreScale& scale, const TrainConfig& cfg);

nlohmann::json checkpoint_to_json(const ScorerModel& model);
ScorerModel checkpoint_from_json(const nlohmann::json& j);

}  // namespace aesadv

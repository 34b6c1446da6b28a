#pragma once

// Deterministic in-repo stand-ins for the pretrained models: a random
// projection of co-occurrence counts for embeddings, a back-off n-gram
// model with beam search for infilling, and one n-gram token model per
// score class for class-conditioned masked-token probabilities.

#include <map>
#include <memory>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"
#include "aesadv/ngram.hpp"

namespace aesadv {

struct BaselineParams {
  int dim = 32;
  int ngram_order = 3;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  int cooccurrence_window = 2;

  void validate() const;
};

struct BaselineModels {
  BaselineParams params;
  Vocabulary vocab;
  std::vector<double> embeddings;  // vocab.size() x params.dim, row-major
  NgramModel infill_model;         // trained on every essay
  std::map<int, NgramModel> class_models;
  std::vector<int> fallback_classes;  // classes with no essays; they use infill_model

  std::span<const double> word_vector(WordId id) const {
    return {embeddings.data() + static_cast<std::size_t>(id) * params.dim, static_cast<std::size_t>(params.dim)};
  }
  const NgramModel& class_model(int label) const;
  std::vector<WordId> encode(std::span<const std::string> tokens) const;

  nlohmann::json to_json() const;
  static BaselineModels from_json(const nlohmann::json& j);
  std::string fingerprint() const;
};

// Class models cover every score of every scale in the corpus.
BaselineModels train_baselines(const Corpus& corpus, const BaselineParams& params);

class BaselineEmbedder final : public EmbeddingBackend {
 public:
  explicit BaselineEmbedder(std::shared_ptr<const BaselineModels> models) : models_(std::move(models)) {}
  std::vector<Vector> embed(std::span<const std::string> texts) const override;
  Vector embed_tokens(std::span<const std::string> tokens) const;

 private:
  std::shared_ptr<const BaselineModels> models_;
};

// Beam search of width num_candidates over the shared n-gram model.
// Completions of every length up to max_new_tokens compete on mean
// per-token log-probability, including the transition back into the right
// context; ties break lexicographically.
class BaselineInfiller final : public InfillBackend {
 public:
  explicit BaselineInfiller(std::shared_ptr<const BaselineModels> models) : models_(std::move(models)) {}
  std::vector<Tokens> infill(const InfillRequest& request) const override;

 private:
  std::shared_ptr<const BaselineModels> models_;
};

// Scores every vocabulary word (plus the unknown word) at the masked slot by
// its left-context probability times the probability of the following
// order-1 tokens, then normalises over the vocabulary.
class BaselineCmlm final : public CmlmBackend {
 public:
  explicit BaselineCmlm(std::shared_ptr<const BaselineModels> models) : models_(std::move(models)) {}
  double token_prob(int class_label, std::span<const std::string> tokens, std::size_t masked_index,
                    std::string_view candidate) const override;
  // Full normalised distribution at the slot, indexed by word id; the
  // boundary ids carry zero.
  std::vector<double> distribution(int class_label, std::span<const std::string> tokens,
                                   std::size_t masked_index) const;

 private:
  std::shared_ptr<const BaselineModels> models_;
};

Backends make_baseline_backends(std::shared_ptr<const BaselineModels> models);

}  // namespace aesadv

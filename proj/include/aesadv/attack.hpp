#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"
#include "aesadv/perturbation.hpp"
#include "json.hpp"

namespace aesadv {

struct AttackSpec {
  double generation_ratio = 0.30;
  double attack_size_ratio = 0.50;
  bool imbalance_aware = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Produces one adversarial variant of `source`. Implementations must be
// safe to call concurrently.
class AdversarialGenerator {
 public:
  virtual ~AdversarialGenerator() = default;
  virtual PerturbedEssay generate(const Essay& source, const std::string& adversarial_id, std::uint64_t seed,
                                  double generation_ratio) const = 0;
};

// The full extraction + perturbation chain over one prompt's backends.
class PipelineGenerator final : public AdversarialGenerator {
 public:
  PipelineGenerator(GenerationSpec spec, Backends backends, std::map<int, ScoreScale> scales);
  PerturbedEssay generate(const Essay& source, const std::string& adversarial_id, std::uint64_t seed,
                          double generation_ratio) const override;

 private:
  GenerationSpec spec_;
  Backends backends_;
  std::map<int, ScoreScale> scales_;
};

// Class weights: proportional to 1/count(y) when imbalance-aware, otherwise
// proportional to count(y) (every essay equally likely). Sums to 1.
std::map<int, double> sampling_weights(const Corpus& base, bool imbalance_aware);

// round-half-up(ratio * base_size).
std::size_t adversarial_target(std::size_t base_size, double attack_size_ratio);

struct SourceDraw {
  std::size_t draw_index = 0;
  std::string source_id;
};

// Sequential seeded draws. Imbalance-aware: pick a class by weight, then an
// essay of that class. Otherwise pick an essay uniformly. Either way an
// essay is not drawn twice until its pool is exhausted; the pool then
// refills.
std::vector<SourceDraw> draw_sources(const Corpus& base, std::size_t count, bool imbalance_aware, std::uint64_t seed);

struct Exclusion {
  std::size_t draw_index = 0;
  std::string source_id;
  std::string reason;
};

struct AttackSet {
  AttackSpec spec;
  std::vector<std::string> base;  // original essay ids
  std::vector<PerturbedEssay> adversarial;
  std::vector<Exclusion> exclusions;
  std::size_t target = 0;

  std::size_t size() const { return base.size() + adversarial.size(); }
  // Originals followed by adversarial essays, ready for evaluation.
  Corpus records(const Corpus& originals) const;
};

struct AugmentedCorpus {
  AttackSpec spec;
  Corpus corpus;  // originals and adversarial essays, deterministically shuffled
  std::vector<PerturbedEssay> adversarial;
  std::vector<Exclusion> exclusions;
  std::size_t target = 0;
};

AttackSet build_attack_set(const Corpus& test, const AttackSpec& spec, const AdversarialGenerator& generator,
                           bool parallel = true);

// Adversarial essays are drawn from `train` only. Throws InvariantViolation
// if any adversarial source is outside train or inside `holdout_ids`.
AugmentedCorpus build_augmented_train(const Corpus& train, const AttackSpec& spec,
                                      const AdversarialGenerator& generator, const std::set<std::string>& holdout_ids,
                                      bool parallel = true);

// Throws InvariantViolation when an adversarial essay's source is not in
// `allowed_sources` or appears in `holdout_ids`.
void check_no_leakage(const std::vector<PerturbedEssay>& adversarial, const Corpus& allowed_sources,
                      const std::set<std::string>& holdout_ids);

// JSON-lines records (originals then adversarial) plus a manifest.
void write_attack_set(const AttackSet& set, const Corpus& originals, const std::filesystem::path& jsonl,
                      const std::filesystem::path& manifest);
void write_augmented(const AugmentedCorpus& set, const std::filesystem::path& jsonl,
                     const std::filesystem::path& manifest);

nlohmann::json attack_spec_json(const AttackSpec& spec);

}  // namespace aesadv

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"
#include "aesadv/scorer.hpp"
#include "json.hpp"

namespace aesadv {

struct RatingPair {
  int reference = 0;
  int predicted = 0;
  ScoreScale scale;
};

// Quadratic weighted kappa over the full scale (K = max - min + 1).
// Returns 1.0, with a warning, when observed and expected disagreement are
// both zero.
double qwk(std::span<const int> reference, std::span<const int> predicted, const ScoreScale& scale);
double qwk(std::span<const RatingPair> pairs);

struct ConfusionMatrix {
  ScoreScale scale;
  std::vector<std::size_t> counts;  // row = reference, column = predicted

  std::size_t classes() const { return static_cast<std::size_t>(scale.num_classes()); }
  std::size_t at(int reference, int predicted) const {
    return counts[scale.class_index(reference) * classes() + scale.class_index(predicted)];
  }
};

ConfusionMatrix confusion_matrix(std::span<const int> reference, std::span<const int> predicted,
                                 const ScoreScale& scale);

struct Evaluation {
  double kappa = 0.0;
  std::size_t count = 0;
  ConfusionMatrix confusion;
};

Evaluation evaluate_predictions(std::span<const int> reference, std::span<const int> predicted,
                                const ScoreScale& scale);
// Scores every essay of a single-prompt corpus against its gold score.
Evaluation evaluate(const ScorerModel& model, const Corpus& set, const EmbeddingBackend& embedder,
                    bool parallel = true);

enum class Condition { kNoAttack, kWithAttack, kWithAugmentation };
std::string to_string(Condition c);

struct ConditionResult {
  double kappa = 0.0;
  std::size_t count = 0;
};

struct QwkCell {
  double generation_ratio = 0.0;
  double attack_size_ratio = 0.0;
  int prompt_id = 0;
  std::optional<ConditionResult> no_attack;
  std::optional<ConditionResult> with_attack;
  std::optional<ConditionResult> with_augmentation;

  std::optional<ConditionResult>& operator[](Condition c);
  const std::optional<ConditionResult>& operator[](Condition c) const;
  // with_attack - no_attack and with_augmentation - with_attack, when both
  // sides are present.
  std::optional<double> attack_delta() const;
  std::optional<double> augmentation_delta() const;
};

struct QwkReport {
  std::vector<QwkCell> cells;
  std::vector<std::string> failures;
};

// Fixed-width table, one row per cell. Missing conditions and deltas that
// depend on them are left blank.
std::string render_text(const QwkReport& report);
// Same rows and the same three-decimal numbers as render_text.
std::string render_csv(const QwkReport& report);
nlohmann::json report_to_json(const QwkReport& report);
QwkReport report_from_json(const nlohmann::json& j);

// "%.3f" with an explicit sign, and "+0.000" instead of "-0.000".
std::string format_delta(double d);
std::string format_kappa(double k);

}  // namespace aesadv

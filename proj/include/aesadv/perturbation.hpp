#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"
#include "aesadv/extraction.hpp"
#include "json.hpp"

namespace aesadv {

struct GenerationSpec {
  double generation_ratio = 0.30;
  double sentence_ratio = 0.5;
  std::optional<std::size_t> window_half_width;  // overrides the ratio rule when set
  std::size_t num_candidates = 5;
  std::size_t length_threshold = 2;  // theta
  double filter_threshold = 1.0;     // delta; +inf rejects everything
  std::uint64_t seed = 0;

  void validate() const;
};

struct MaskedSentence {
  Tokens original;
  PhraseSpan span;
  Tokens tokens_with_mask;  // the span collapsed into one kMaskToken

  Tokens phrase() const { return {original.begin() + span.start, original.begin() + span.end}; }
  std::size_t phrase_length() const { return span.length(); }
};

MaskedSentence mask_phrase(const Tokens& sentence, const PhraseSpan& span);

struct PerturbationCandidate {
  Tokens fill;
  Tokens filled_sentence;
  std::map<int, double> log_likelihood;  // per class, floored at kLogLikelihoodFloor
  double log_ratio = 0.0;
  double ratio = 0.0;
  bool length_ok = false;
  bool accepted = false;
};

inline constexpr double kLogLikelihoodFloor = -700.0;

// Asks the infiller for fills of at most |P| + theta tokens and drops any
// that reproduce the original phrase (case-insensitively). Returned in
// backend order.
std::vector<PerturbationCandidate> generate_candidates(const MaskedSentence& masked, const GenerationSpec& spec,
                                                       const InfillBackend& backend, std::uint64_t seed);

// |q| <= |P| + theta.
bool length_rule(std::size_t fill_length, std::size_t phrase_length, std::size_t theta);

// log of prod_k P(q_k | filled sentence with q_k masked; class y). Positions
// index the filled sentence.
double cmlm_log_likelihood(const Tokens& filled_sentence, std::size_t fill_start, std::size_t fill_length, int label,
                           const CmlmBackend& backend);

// log L(y) - max over other classes of log L. Throws ConfigError with fewer
// than two classes or when y is absent.
double log_likelihood_ratio(const std::map<int, double>& log_likelihood, int true_label);
// exp of the above, with the exponent clamped to +-700.
double likelihood_ratio(const std::map<int, double>& log_likelihood, int true_label);

// Fills per-class likelihoods, ratio, length check and acceptance.
void score_candidates(std::vector<PerturbationCandidate>& candidates, const MaskedSentence& masked,
                      const GenerationSpec& spec, const ScoreScale& scale, int true_label, const CmlmBackend& backend);

// Re-evaluates acceptance for threshold delta without rescoring.
void apply_threshold(std::vector<PerturbationCandidate>& candidates, double delta);

// Index of the accepted candidate with the largest ratio (first on ties).
std::optional<std::size_t> select_perturbation(const std::vector<PerturbationCandidate>& candidates, double delta);

enum class SentenceOutcome { kPerturbed, kNoCandidate, kFilteredOut };
std::string to_string(SentenceOutcome outcome);

struct SentenceReport {
  std::size_t index = 0;
  SentenceOutcome outcome = SentenceOutcome::kNoCandidate;
  std::optional<double> ratio;
  PhraseSpan span;
  Tokens phrase;
  Tokens fill;
};

struct PerturbationReport {
  std::vector<SentenceReport> sentences;
  bool degenerate = false;  // no selected sentence was perturbed
};

struct PerturbedEssay {
  Essay essay;
  PerturbationReport report;
};

// Phrase span for a sentence of `length` tokens: the fixed window when the
// spec sets one, otherwise the generation-ratio window.
PhraseSpan choose_span(const GenerationSpec& spec, std::size_t length, std::size_t keyword_index,
                       std::size_t sentence_index);

// Runs keyword -> window -> mask -> candidates -> filter on every selected
// sentence and splices accepted fills into the text. The result keeps the
// source's gold score and prompt.
PerturbedEssay perturb_essay(const Essay& essay, const TokenizedEssay& tokens, const SentenceSelection& selection,
                             const GenerationSpec& spec, const ScoreScale& scale, const Backends& backends,
                             std::string adversarial_id);

// Adversarial record schema:
// {id, source_id, prompt_id, text, gold_score, provenance, report}.
nlohmann::json adversarial_to_json(const PerturbedEssay& perturbed);

}  // namespace aesadv

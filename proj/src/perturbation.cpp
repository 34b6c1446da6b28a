#include "aesadv/perturbation.hpp"

#include <algorithm>
#include <cmath>

#include "aesadv/error.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

void GenerationSpec::validate() const {
  if (!(generation_ratio > 0.0) || generation_ratio >= 1.0) throw ConfigError("generation_ratio must be in (0, 1)");
  if (!(sentence_ratio > 0.0) || sentence_ratio > 1.0) throw ConfigError("sentence_ratio must be in (0, 1]");
  if (num_candidates < 1) throw ConfigError("num_candidates must be >= 1");
  if (!(filter_threshold > 0.0)) throw ConfigError("filter_threshold must be > 0");
}

MaskedSentence mask_phrase(const Tokens& sentence, const PhraseSpan& span) {
  if (span.start >= span.end || span.end > sentence.size()) throw InvariantViolation("phrase span outside sentence");
  MaskedSentence m{sentence, span, {}};
  m.tokens_with_mask.assign(sentence.begin(), sentence.begin() + span.start);
  m.tokens_with_mask.emplace_back(kMaskToken);
  m.tokens_with_mask.insert(m.tokens_with_mask.end(), sentence.begin() + span.end, sentence.end());
  return m;
}

bool length_rule(std::size_t fill_length, std::size_t phrase_length, std::size_t theta) {
  return fill_length <= phrase_length + theta;
}

namespace {

bool same_words(const Tokens& a, const Tokens& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (lowercase(a[i]) != lowercase(b[i])) return false;
  }
  return true;
}

std::string join(const Tokens& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::vector<PerturbationCandidate> generate_candidates(const MaskedSentence& masked, const GenerationSpec& spec,
                                                       const InfillBackend& backend, std::uint64_t seed) {
  const auto& span = masked.span;
  InfillRequest req;
  req.tokens = masked.original;
  for (std::size_t i = span.start; i < span.end; ++i) req.tokens[i] = std::string(kMaskToken);
  req.mask_start = span.start;
  req.mask_len = span.length();
  req.max_new_tokens = span.length() + spec.length_threshold;
  req.num_candidates = spec.num_candidates;
  req.seed = seed;

  const auto fills = backend.infill(req);
  validate_infill(fills, req);
  const Tokens phrase = masked.phrase();
  std::vector<PerturbationCandidate> out;
  for (const auto& fill : fills) {
    if (fill.empty() || same_words(fill, phrase)) continue;
    PerturbationCandidate c;
    c.fill = fill;
    c.filled_sentence.assign(masked.original.begin(), masked.original.begin() + span.start);
    c.filled_sentence.insert(c.filled_sentence.end(), fill.begin(), fill.end());
    c.filled_sentence.insert(c.filled_sentence.end(), masked.original.begin() + span.end, masked.original.end());
    out.push_back(std::move(c));
  }
  return out;
}

double cmlm_log_likelihood(const Tokens& filled_sentence, std::size_t fill_start, std::size_t fill_length, int label,
                           const CmlmBackend& backend) {
  if (fill_length == 0) throw InvariantViolation("likelihood of an empty fill");
  if (fill_start + fill_length > filled_sentence.size()) throw InvariantViolation("fill outside sentence");
  Tokens work = filled_sentence;
  double log_l = 0.0;
  for (std::size_t k = 0; k < fill_length; ++k) {
    const std::size_t pos = fill_start + k;
    work[pos] = std::string(kMaskToken);
    const double p = backend.token_prob(label, work, pos, filled_sentence[pos]);
    validate_probability(p);
    log_l += std::log(p);
    work[pos] = filled_sentence[pos];
  }
  return std::max(log_l, kLogLikelihoodFloor);
}

double log_likelihood_ratio(const std::map<int, double>& log_likelihood, int true_label) {
  if (log_likelihood.size() < 2) throw ConfigError("likelihood ratio needs at least two classes");
  auto self = log_likelihood.find(true_label);
  if (self == log_likelihood.end()) throw ConfigError("true class " + std::to_string(true_label) + " not scored");
  double best_other = -std::numeric_limits<double>::infinity();
  for (const auto& [y, l] : log_likelihood) {
    if (y != true_label) best_other = std::max(best_other, l);
  }
  return self->second - best_other;
}

double likelihood_ratio(const std::map<int, double>& log_likelihood, int true_label) {
  return std::exp(std::clamp(log_likelihood_ratio(log_likelihood, true_label), -700.0, 700.0));
}

void score_candidates(std::vector<PerturbationCandidate>& candidates, const MaskedSentence& masked,
                      const GenerationSpec& spec, const ScoreScale& scale, int true_label, const CmlmBackend& backend) {
  if (scale.num_classes() < 2) throw ConfigError("label-preserving filter needs at least two classes");
  for (auto& c : candidates) {
    c.length_ok = length_rule(c.fill.size(), masked.phrase_length(), spec.length_threshold);
    c.log_likelihood.clear();
    if (!c.length_ok) {
      c.accepted = false;
      continue;
    }
    for (int y = scale.min_score; y <= scale.max_score; ++y) {
      c.log_likelihood[y] = cmlm_log_likelihood(c.filled_sentence, masked.span.start, c.fill.size(), y, backend);
    }
    c.log_ratio = log_likelihood_ratio(c.log_likelihood, true_label);
    c.ratio = likelihood_ratio(c.log_likelihood, true_label);
  }
  apply_threshold(candidates, spec.filter_threshold);
}

void apply_threshold(std::vector<PerturbationCandidate>& candidates, double delta) {
  const double log_delta = std::log(delta);
  for (auto& c : candidates) c.accepted = c.length_ok && c.log_ratio > log_delta;
}

std::optional<std::size_t> select_perturbation(const std::vector<PerturbationCandidate>& candidates, double delta) {
  const double log_delta = std::log(delta);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.length_ok || !(c.log_ratio > log_delta)) continue;
    if (!best || c.log_ratio > candidates[*best].log_ratio) best = i;
  }
  return best;
}

std::string to_string(SentenceOutcome outcome) {
  switch (outcome) {
    case SentenceOutcome::kPerturbed:
      return "perturbed";
    case SentenceOutcome::kNoCandidate:
      return "no_candidate";
    case SentenceOutcome::kFilteredOut:
      return "filtered_out";
  }
  return "unknown";
}

PhraseSpan choose_span(const GenerationSpec& spec, std::size_t length, std::size_t keyword_index,
                       std::size_t sentence_index) {
  if (spec.window_half_width) return phrase_window(length, keyword_index, *spec.window_half_width, sentence_index);
  return ratio_window(length, keyword_index, spec.generation_ratio, sentence_index);
}

PerturbedEssay perturb_essay(const Essay& essay, const TokenizedEssay& tokens, const SentenceSelection& selection,
                             const GenerationSpec& spec, const ScoreScale& scale, const Backends& backends,
                             std::string adversarial_id) {
  spec.validate();
  const TfidfStats stats(tokens);
  PerturbedEssay out;
  struct Splice {
    std::size_t begin, end;
    std::string text;
  };
  std::vector<Splice> splices;

  for (std::size_t idx : selection.selected) {
    if (idx >= tokens.sentences.size()) throw InvariantViolation("selected sentence index out of range");
    const Sentence& sentence = tokens.sentences[idx];
    SentenceReport rep;
    rep.index = idx;
    if (sentence.tokens.empty()) {
      out.report.sentences.push_back(rep);
      continue;
    }
    const std::size_t kw = keyword(sentence, stats);
    rep.span = choose_span(spec, sentence.size(), kw, idx);
    const auto masked = mask_phrase(sentence.words(), rep.span);
    rep.phrase = masked.phrase();

    auto candidates = generate_candidates(masked, spec, *backends.infiller, mix_seed(spec.seed, idx));
    if (candidates.empty()) {
      rep.outcome = SentenceOutcome::kNoCandidate;
      out.report.sentences.push_back(rep);
      continue;
    }
    score_candidates(candidates, masked, spec, scale, essay.gold_score, *backends.cmlm);
    const auto chosen = select_perturbation(candidates, spec.filter_threshold);
    if (!chosen) {
      rep.outcome = SentenceOutcome::kFilteredOut;
      out.report.sentences.push_back(rep);
      continue;
    }
    const auto& best = candidates[*chosen];
    rep.outcome = SentenceOutcome::kPerturbed;
    rep.ratio = best.ratio;
    rep.fill = best.fill;
    std::string replacement = join(best.fill);
    const std::string& first = sentence.tokens[rep.span.start].text;
    if (rep.span.start == 0 && !first.empty() && std::isupper(static_cast<unsigned char>(first[0])) &&
        !replacement.empty()) {
      replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
    }
    splices.push_back({sentence.tokens[rep.span.start].begin, sentence.tokens[rep.span.end - 1].end,
                       std::move(replacement)});
    out.report.sentences.push_back(rep);
  }

  out.report.degenerate = splices.empty();
  std::string text = essay.text;
  std::sort(splices.begin(), splices.end(), [](const Splice& a, const Splice& b) { return a.begin > b.begin; });
  for (const auto& s : splices) text.replace(s.begin, s.end - s.begin, s.text);

  out.essay.id = std::move(adversarial_id);
  out.essay.prompt_id = essay.prompt_id;
  out.essay.text = std::move(text);
  out.essay.rater_scores = essay.rater_scores;
  out.essay.gold_score = essay.gold_score;
  out.essay.provenance = Provenance::kAdversarial;
  out.essay.source_id = essay.is_adversarial() ? essay.source_id : essay.id;
  return out;
}

nlohmann::json adversarial_to_json(const PerturbedEssay& perturbed) {
  const Essay& e = perturbed.essay;
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : perturbed.report.sentences) {
    nlohmann::json js = {{"index", s.index}, {"outcome", to_string(s.outcome)}};
    if (s.ratio) js["R"] = *s.ratio;
    sentences.push_back(std::move(js));
  }
  return {{"id", e.id},
          {"source_id", e.source_id},
          {"prompt_id", e.prompt_id},
          {"text", e.text},
          {"gold_score", e.gold_score},
          {"provenance", "adversarial"},
          {"report", {{"sentences", sentences}}}};
}

}  // namespace aesadv

#include <cmath>
#include <limits>

#include "aesadv/error.hpp"
#include "aesadv/perturbation.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aesadv;
using testing::ScriptedInfiller;
using testing::TableCmlm;

namespace {

const ScoreScale kScale{1, 1, 4};

MaskedSentence masked_example() {
  const Tokens sentence = {"the", "old", "dog", "sleeps", "all", "day", "long"};
  PhraseSpan span;
  span.start = 2;
  span.end = 4;
  return mask_phrase(sentence, span);
}

PerturbationCandidate with_ratio(double log_ratio, bool length_ok = true) {
  PerturbationCandidate c;
  c.log_ratio = log_ratio;
  c.ratio = std::exp(log_ratio);
  c.length_ok = length_ok;
  return c;
}

}  // namespace

TEST_CASE("mask collapses the span into one mask token") {
  const auto m = masked_example();
  CHECK(m.phrase() == Tokens{"dog", "sleeps"});
  CHECK(m.phrase_length() == 2);
  CHECK(m.tokens_with_mask == Tokens{"the", "old", std::string(kMaskToken), "all", "day", "long"});
}

TEST_CASE("length rule boundary") {
  CHECK(length_rule(4, 2, 2));
  CHECK(!length_rule(5, 2, 2));
  CHECK(length_rule(0, 0, 0));
  CHECK(!length_rule(1, 0, 0));
}

TEST_CASE("candidates: request limits and original-phrase removal") {
  const auto m = masked_example();
  GenerationSpec spec;
  spec.num_candidates = 3;
  spec.length_threshold = 1;
  const ScriptedInfiller infiller({{"Dog", "SLEEPS"}, {"cat", "naps"}, {"a", "b", "c"}, {"a", "b", "c", "d"}, {"x"}});
  const auto cands = generate_candidates(m, spec, infiller, 0);
  // The 4-token fill exceeds |P| + theta = 3 and never comes back; the
  // original phrase is dropped after retrieval.
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].fill == Tokens{"cat", "naps"});
  CHECK(cands[0].filled_sentence == Tokens{"the", "old", "cat", "naps", "all", "day", "long"});
  CHECK(cands[1].fill == Tokens{"a", "b", "c"});
}

TEST_CASE("likelihood ratio against the best other class") {
  const std::map<int, double> ll = {{1, -3.0}, {2, -1.0}, {3, -2.0}};
  CHECK(log_likelihood_ratio(ll, 2) == doctest::Approx(1.0));
  CHECK(log_likelihood_ratio(ll, 1) == doctest::Approx(-2.0));
  CHECK(likelihood_ratio(ll, 3) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(log_likelihood_ratio({{1, -1.0}}, 1), ConfigError);
  CHECK_THROWS_AS(log_likelihood_ratio(ll, 9), ConfigError);
  const std::map<int, double> extreme = {{1, 0.0}, {2, -5000.0}};
  CHECK(likelihood_ratio(extreme, 1) == doctest::Approx(std::exp(700.0)));
  CHECK(std::isfinite(likelihood_ratio(extreme, 2)));
}

TEST_CASE("log-space likelihood matches the direct product") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::pair<int, std::string>, double> table;
    const Tokens words = {"a", "b", "c", "d", "e"};
    for (int y = 1; y <= 2; ++y)
      for (const auto& w : words) table[{y, w}] = 0.01 + 0.98 * rng.uniform();
    const TableCmlm cmlm(table, 0.5);
    Tokens sentence;
    const std::size_t len = 2 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) sentence.push_back(words[rng.below(5)]);
    const std::size_t start = rng.below(len);
    const std::size_t flen = 1 + rng.below(len - start);
    for (int y = 1; y <= 2; ++y) {
      double product = 1.0;
      for (std::size_t k = 0; k < flen; ++k) product *= table[{y, sentence[start + k]}];
      CHECK(std::abs(cmlm_log_likelihood(sentence, start, flen, y, cmlm) - std::log(product)) < 1e-9);
    }
  }
}

TEST_CASE("log-space likelihood for tiny probabilities and the floor") {
  const TableCmlm cmlm({}, 1e-60);
  const Tokens s(5, "w");
  const double ll = cmlm_log_likelihood(s, 0, 5, 1, cmlm);
  CHECK(ll == doctest::Approx(5.0 * std::log(1e-60)).epsilon(1e-12));
  // Where the direct product underflows the value is clamped so ratios
  // stay finite.
  CHECK(std::pow(1e-200, 5) == 0.0);
  const TableCmlm tiny({}, 1e-200);
  CHECK(cmlm_log_likelihood(s, 0, 5, 1, tiny) == kLogLikelihoodFloor);
}

TEST_CASE("cmlm probabilities out of range are rejected") {
  const TableCmlm bad({}, 1.2);
  CHECK_THROWS_AS(cmlm_log_likelihood(Tokens{"a"}, 0, 1, 1, bad), ProtocolError);
  const TableCmlm zero({}, 0.0);
  CHECK_THROWS_AS(cmlm_log_likelihood(Tokens{"a"}, 0, 1, 1, zero), ProtocolError);
}

TEST_CASE("threshold: accepted sets shrink as delta grows (property)") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<PerturbationCandidate> cands;
    const std::size_t n = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) cands.push_back(with_ratio(6.0 * rng.uniform() - 3.0, rng.below(4) != 0));
    const double d1 = std::exp(6.0 * rng.uniform() - 3.0);
    const double d2 = d1 * (1.0 + 3.0 * rng.uniform());
    auto a = cands;
    auto b = cands;
    apply_threshold(a, d1);
    apply_threshold(b, d2);
    for (std::size_t i = 0; i < n; ++i) {
      if (b[i].accepted) CHECK(a[i].accepted);
      if (!cands[i].length_ok) CHECK(!a[i].accepted);
    }
  }
}

TEST_CASE("threshold: strict inequality and infinite delta") {
  std::vector<PerturbationCandidate> c = {with_ratio(0.0), with_ratio(0.5), with_ratio(700.0)};
  apply_threshold(c, 1.0);
  CHECK(!c[0].accepted);
  CHECK(c[1].accepted);
  apply_threshold(c, std::numeric_limits<double>::infinity());
  for (const auto& x : c) CHECK(!x.accepted);
  CHECK(!select_perturbation(c, std::numeric_limits<double>::infinity()).has_value());
}

TEST_CASE("selection takes the highest ratio, first on ties") {
  std::vector<PerturbationCandidate> c = {with_ratio(0.2), with_ratio(1.5), with_ratio(1.5), with_ratio(9.0, false)};
  CHECK(select_perturbation(c, 1.0) == std::optional<std::size_t>(1));
  CHECK(!select_perturbation({with_ratio(-1.0)}, 1.0).has_value());
}

TEST_CASE("score_candidates fills likelihoods only for length-ok fills") {
  const auto m = masked_example();
  GenerationSpec spec;
  spec.length_threshold = 0;
  std::vector<PerturbationCandidate> cands(2);
  cands[0].fill = {"cat", "naps"};
  cands[0].filled_sentence = {"the", "old", "cat", "naps", "all", "day", "long"};
  cands[1].fill = {"a", "b", "c"};
  cands[1].filled_sentence = {"the", "old", "a", "b", "c", "all", "day", "long"};
  const TableCmlm cmlm({{{2, "cat"}, 0.5}, {{2, "naps"}, 0.5}}, 0.1);
  score_candidates(cands, m, spec, kScale, 2, cmlm);
  CHECK(cands[0].length_ok);
  CHECK(cands[0].log_likelihood.size() == 4);
  CHECK(cands[0].log_ratio == doctest::Approx(2.0 * std::log(0.5) - 2.0 * std::log(0.1)));
  CHECK(cands[0].accepted);
  CHECK(!cands[1].length_ok);
  CHECK(!cands[1].accepted);
  CHECK(cands[1].log_likelihood.empty());
}

TEST_CASE("perturb_essay copies the label and records provenance") {
  const auto essay = testing::make_essay("src", 1, 3, "The quick economy grows fast. Markets like steady rules.");
  const auto tok = tokenize(essay);
  SentenceSelection sel;
  sel.selected = {0, 1};
  sel.k = 2;
  GenerationSpec spec;
  spec.generation_ratio = 0.2;
  Backends b;
  b.embedder = std::make_shared<testing::FakeEmbedder>();
  b.infiller = std::make_shared<testing::ScriptedInfiller>(std::vector<Tokens>{{"zzz"}});
  b.cmlm = std::make_shared<testing::TableCmlm>(std::map<std::pair<int, std::string>, double>{{{3, "zzz"}, 0.9}}, 0.1);
  const auto out = perturb_essay(essay, tok, sel, spec, kScale, b, "src#0");
  CHECK(out.essay.gold_score == 3);
  CHECK(out.essay.prompt_id == 1);
  CHECK(out.essay.is_adversarial());
  CHECK(out.essay.source_id == "src");
  CHECK(out.essay.id == "src#0");
  CHECK(!out.report.degenerate);
  REQUIRE(out.report.sentences.size() == 2);
  for (const auto& s : out.report.sentences) CHECK(s.outcome == SentenceOutcome::kPerturbed);
  CHECK(out.essay.text.find("zzz") != std::string::npos);
  CHECK(out.essay.text != essay.text);
  const auto j = adversarial_to_json(out);
  CHECK(j.at("provenance") == "adversarial");
  CHECK(j.at("report").at("sentences").size() == 2);

  // A filter nobody passes leaves the text untouched and flags the essay.
  spec.filter_threshold = std::numeric_limits<double>::infinity();
  const auto none = perturb_essay(essay, tok, sel, spec, kScale, b, "src#1");
  CHECK(none.report.degenerate);
  CHECK(none.essay.text == essay.text);
  CHECK(none.essay.gold_score == 3);
  CHECK(none.report.sentences[0].outcome == SentenceOutcome::kFilteredOut);
}

TEST_CASE("generation spec validation") {
  GenerationSpec s;
  s.generation_ratio = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = GenerationSpec{};
  s.num_candidates = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = GenerationSpec{};
  s.filter_threshold = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

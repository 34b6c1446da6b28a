#include "aesadv/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aesadv/error.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

namespace {

const std::vector<std::string> kFunction = {"the", "a",    "of",   "to",    "and",  "in",  "is",
                                            "that", "it",  "for",  "with",  "on",   "as",  "this",
                                            "was", "be",   "are",  "by",    "from", "we",  "they"};

// Small on purpose: topic words recur across sentences, so within an essay
// the register words are the rare, high TF-IDF ones.
const std::vector<std::string> kTopic = {"computers", "people", "time", "family", "school", "internet"};

const std::array<std::vector<std::string>, 4> kRegister = {{
    {"stuff", "things", "good", "bad",   "lot",  "really", "very", "fun",  "cool", "nice",
     "big",   "alot",   "thing", "okay", "just", "gonna",  "kinda", "lots", "mad", "awesome"},
    {"helpful", "useful",  "important", "problem", "reason",  "example", "learn",   "often",  "because", "many",
     "should",  "different", "better",  "easy",    "hard",    "help",    "believe", "think",  "also",    "maybe"},
    {"significant", "benefit",   "communicate",   "research", "develop",  "opportunity", "however",
     "moreover",    "perspective", "valuable",    "consequently", "essential", "evidence", "improve",
     "responsible", "influence", "individuals",   "experience", "therefore", "aspects"},
    {"profound",    "nuanced",    "ubiquitous", "paradigm",  "facilitate", "articulate",   "substantive",
     "meticulous",  "ramification", "juxtaposition", "indispensable", "compelling", "multifaceted", "discern",
     "elucidate",   "unequivocally", "pervasive", "ostensibly", "salient",  "cognizant"},
}};

const std::string& register_word(Rng& rng, const std::array<double, 4>& w, double total) {
  double pick = rng.uniform() * total;
  std::size_t t = 0;
  while (t < 3 && pick >= w[t]) pick -= w[t++];
  return kRegister[t][rng.below(kRegister[t].size())];
}

// Generic filler with occasional stray register words, plus one run of
// register words at a random position.
std::string make_sentence(Rng& rng, double quality, std::size_t length, const SyntheticSpec& spec) {
  // Register weights peak at the essay's latent quality.
  std::array<double, 4> w{};
  double total = 0.0;
  for (std::size_t t = 0; t < 4; ++t) {
    w[t] = std::exp(-1.6 * std::abs(static_cast<double>(t) - quality));
    total += w[t];
  }
  std::vector<const std::string*> words;
  for (std::size_t i = 0; i < length; ++i) {
    const double u = rng.uniform();
    const double generic = 1.0 - spec.register_share;
    if (u < generic * 0.55) {
      words.push_back(&kFunction[rng.below(kFunction.size())]);
    } else if (u < generic) {
      words.push_back(&kTopic[rng.below(kTopic.size())]);
    } else {
      words.push_back(&register_word(rng, w, total));
    }
  }
  // Better essays use longer register phrases: one word at the bottom of
  // the scale, `phrase_words` at the top.
  const double span = static_cast<double>(spec.phrase_words - 1) * std::clamp(quality, 0.0, 3.0) / 3.0;
  const auto run = 1 + static_cast<std::size_t>(std::floor(span + rng.uniform()));
  const auto at = static_cast<std::ptrdiff_t>(rng.below(length + 1));
  for (std::size_t i = 0; i < run; ++i) words.insert(words.begin() + at, &register_word(rng, w, total));

  std::string out;
  for (const auto* word : words) {
    if (!out.empty()) out += ' ';
    out += *word;
  }
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out + '.';
}

}  // namespace

void SyntheticSpec::validate() const {
  if (essays < class_shares.size() * 2) throw ConfigError("synthetic corpus too small for its class count");
  if (class_shares.size() < 2) throw ConfigError("synthetic corpus needs at least two classes");
  for (double s : class_shares) {
    if (!(s > 0.0)) throw ConfigError("synthetic class shares must be positive");
  }
  if (!(quality_noise >= 0.0)) throw ConfigError("quality_noise must be >= 0");
  if (!(register_share >= 0.0) || register_share >= 1.0) throw ConfigError("register_share must be in [0, 1)");
  if (!(length_effect >= 0.0)) throw ConfigError("length_effect must be >= 0");
  if (min_sentences < 1) throw ConfigError("min_sentences must be >= 1");
}

std::string synthetic_tsv(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const double share_total = std::accumulate(spec.class_shares.begin(), spec.class_shares.end(), 0.0);

  // Largest-remainder quotas so the class sizes sum to `essays`.
  const std::size_t k = spec.class_shares.size();
  std::vector<std::size_t> quota(k);
  std::vector<std::pair<double, std::size_t>> remainder;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double exact = spec.class_shares[c] / share_total * static_cast<double>(spec.essays);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainder.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainder.begin(), remainder.end());
  for (std::size_t i = 0; assigned < spec.essays; ++i, ++assigned) ++quota[remainder[i % k].second];

  std::vector<int> scores;
  for (std::size_t c = 0; c < k; ++c) scores.insert(scores.end(), quota[c], spec.min_score + static_cast<int>(c));
  rng.shuffle(std::span<int>(scores));

  std::ostringstream out;
  out << "essay_id\tessay_set\tessay\trater1_domain1\trater2_domain1\tdomain1_score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int score = scores[i];
    const double level = static_cast<double>(score - spec.min_score) * 3.0 / static_cast<double>(k - 1);
    const double quality = level + spec.quality_noise * rng.normal();
    const std::size_t sentences = spec.min_sentences + rng.below(spec.sentence_spread + 1) + static_cast<std::size_t>(std::clamp(quality, 0.0, 3.0) * spec.length_effect);
    std::string text;
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t len = 8 + rng.below(9);
      if (!text.empty()) text += ' ';
      text += make_sentence(rng, quality, len, spec);
    }
    // Two raters who each sit at most one point from the resolved score.
    const int r1 = std::clamp(score - static_cast<int>(rng.below(2)), spec.min_score, spec.min_score + int(k) - 1);
    const int r2 = std::clamp(2 * score - r1, spec.min_score, spec.min_score + int(k) - 1);
    out << 1000 + i << '\t' << spec.prompt_id << '\t' << text << '\t' << r1 << '\t' << r2 << '\t' << score << '\n';
  }
  return out.str();
}

Corpus synthetic_corpus(const SyntheticSpec& spec) {
  auto result = ingest_tsv_text(synthetic_tsv(spec), {});
  return std::move(result.corpus);
}

}  // namespace aesadv

#include "aesadv/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aesadv/error.hpp"
#include "aesadv/kernels.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

namespace {

double squared_distance(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

std::vector<double> flatten(const std::vector<Vector>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * (rows.empty() ? 0 : rows.front().size()));
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace

KMeansResult kmeans(const std::vector<Vector>& vectors, std::size_t k, std::uint64_t seed, bool parallel) {
  const std::size_t n = vectors.size();
  if (k < 1 || k > n) {
    throw ConfigError("k-means needs 1 <= k <= " + std::to_string(n) + ", got " + std::to_string(k));
  }
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw InvariantViolation("k-means input vectors differ in dimension");
  }

  KMeansResult result;
  Rng rng(seed);
  std::vector<std::size_t> centers{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    const Vector& last = vectors[centers.back()];
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(vectors[i], last));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    centers.push_back(far);
  }
  for (auto c : centers) result.centroids.push_back(vectors[c]);

  const auto points = flatten(vectors);
  std::vector<std::size_t> assignment(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> next(n);
  std::vector<double> dist2(n);
  for (std::size_t iter = 0; iter < kKMeansMaxIterations; ++iter) {
    const auto centroids = flatten(result.centroids);
    if (parallel) {
      kernels::assign_nearest_parallel(points, centroids, dim, next, dist2);
    } else {
      kernels::assign_nearest_serial(points, centroids, dim, next, dist2);
    }
    double distortion = 0.0;
    for (double d : dist2) distortion += d;
    result.distortion.push_back(distortion);
    result.iterations = iter + 1;
    const bool changed = next != assignment;
    assignment = next;
    if (!changed) break;

    std::vector<Vector> sums(k, Vector(dim, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[assignment[i]][j] += vectors[i][j];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (auto& x : sums[c]) x /= static_cast<double>(sizes[c]);
      result.centroids[c] = sums[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      // Re-seed with the point farthest from its own centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = squared_distance(vectors[i], result.centroids[assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      taken[far] = true;
      result.centroids[c] = vectors[far];
    }
  }
  result.assignments = std::move(assignment);
  return result;
}

std::size_t default_sentence_count(std::size_t sentence_count, double sentence_ratio) {
  const auto k = round_half_up(sentence_ratio * static_cast<double>(sentence_count));
  return std::min<std::size_t>(sentence_count, static_cast<std::size_t>(std::max<long long>(1, k)));
}

SentenceSelection select_sentences(const Essay& essay, const TokenizedEssay& tokens, const EmbeddingBackend& embedder,
                                   std::size_t k, std::uint64_t seed) {
  const std::size_t count = tokens.sentences.size();
  if (count == 0) throw DataError("essay " + essay.id + " has no sentences");
  SentenceSelection sel{essay.id, {}, std::min(std::max<std::size_t>(k, 1), count)};
  if (sel.k == count) {
    for (std::size_t i = 0; i < count; ++i) sel.selected.push_back(i);
    return sel;
  }
  std::vector<std::string> texts;
  texts.reserve(count);
  for (const auto& s : tokens.sentences) texts.push_back(essay.text.substr(s.begin, s.end - s.begin));
  const auto vectors = embedder.embed(texts);
  validate_embeddings(vectors, count);

  const auto clusters = kmeans(vectors, sel.k, seed, /*parallel=*/false);
  std::set<std::size_t> chosen;
  for (const auto& centroid : clusters.centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      if (chosen.count(i)) continue;
      const double d = squared_distance(vectors[i], centroid);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    chosen.insert(best);
  }
  sel.selected.assign(chosen.begin(), chosen.end());
  return sel;
}

// ---------------------------------------------------------------------------

TfidfStats::TfidfStats(const TokenizedEssay& essay) {
  term_freq_.resize(essay.sentences.size());
  for (std::size_t s = 0; s < essay.sentences.size(); ++s) {
    for (const auto& t : essay.sentences[s].tokens) ++term_freq_[s][lowercase(t.text)];
    for (const auto& [term, c] : term_freq_[s]) ++doc_freq_[term];
  }
}

std::size_t TfidfStats::df(const std::string& term) const {
  auto it = doc_freq_.find(lowercase(term));
  return it == doc_freq_.end() ? 0 : it->second;
}

std::size_t TfidfStats::tf(const std::string& term, std::size_t sentence) const {
  if (sentence >= term_freq_.size()) return 0;
  auto it = term_freq_[sentence].find(lowercase(term));
  return it == term_freq_[sentence].end() ? 0 : it->second;
}

double TfidfStats::score(const std::string& term, std::size_t sentence) const {
  const double s = static_cast<double>(sentence_count());
  return static_cast<double>(tf(term, sentence)) * std::log((1.0 + s) / (1.0 + static_cast<double>(df(term))));
}

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",      "about",   "above", "after",  "again", "against", "all",    "am",     "an",    "and",   "any",
      "are",    "as",      "at",    "be",     "because", "been",  "before", "being",  "below", "between",
      "both",   "but",     "by",    "can",    "could", "did",     "do",     "does",   "doing", "down",  "during",
      "each",   "few",     "for",   "from",   "further", "had",   "has",    "have",   "having", "he",   "her",
      "here",   "hers",    "herself", "him",  "himself", "his",   "how",    "i",      "if",    "in",    "into",
      "is",     "it",      "it's",  "its",    "itself", "just",   "me",     "more",   "most",  "my",    "myself",
      "no",     "nor",     "not",   "now",    "of",    "off",     "on",     "once",   "only",  "or",    "other",
      "our",    "ours",    "ourselves", "out", "over", "own",     "same",   "she",    "should", "so",   "some",
      "such",   "than",    "that",  "the",    "their", "theirs",  "them",   "themselves", "then", "there",
      "these",  "they",    "this",  "those",  "through", "to",    "too",    "under",  "until", "up",    "very",
      "was",    "we",      "were",  "what",   "when",  "where",   "which",  "while",  "who",   "whom",  "why",
      "will",   "with",    "would", "you",    "your",  "yours",   "yourself", "yourselves", "don't", "i'm",
      "also",   "many",    "much",  "get",    "got",   "like",    "think",  "one"};
  return words;
}

}  // namespace

bool is_stopword(std::string_view lowercase_word) { return stopwords().count(lowercase_word) > 0; }

std::size_t keyword(const Sentence& sentence, const TfidfStats& stats) {
  const auto& toks = sentence.tokens;
  if (toks.empty()) throw InvariantViolation("keyword extraction on an empty sentence");
  std::vector<std::string> lower;
  lower.reserve(toks.size());
  for (const auto& t : toks) lower.push_back(lowercase(t.text));
  const bool all_stop = std::all_of(lower.begin(), lower.end(), [](const std::string& w) { return is_stopword(w); });
  std::size_t best = toks.size();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!all_stop && is_stopword(lower[i])) continue;
    const double s = stats.score(lower[i], sentence.index);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

PhraseSpan phrase_window(std::size_t sentence_length, std::size_t keyword_index, std::size_t half_width,
                         std::size_t sentence_index) {
  if (keyword_index >= sentence_length) throw InvariantViolation("keyword index outside sentence");
  PhraseSpan span;
  span.sentence_index = sentence_index;
  span.keyword = keyword_index;
  span.half_width = half_width;
  span.start = keyword_index >= half_width ? keyword_index - half_width : 0;
  span.end = std::min(sentence_length, keyword_index + half_width + 1);
  return span;
}

PhraseSpan ratio_window(std::size_t sentence_length, std::size_t keyword_index, double generation_ratio,
                        std::size_t sentence_index) {
  if (keyword_index >= sentence_length) throw InvariantViolation("keyword index outside sentence");
  if (!(generation_ratio > 0.0) || generation_ratio >= 1.0) throw ConfigError("generation ratio must be in (0, 1)");
  const auto target = round_half_up(generation_ratio * static_cast<double>(sentence_length));
  const std::size_t length = std::clamp<std::size_t>(static_cast<std::size_t>(std::max<long long>(target, 1)), 1,
                                                     sentence_length);
  const std::size_t left = (length - 1) / 2;
  std::size_t start = keyword_index >= left ? keyword_index - left : 0;
  if (start + length > sentence_length) start = sentence_length - length;
  PhraseSpan span;
  span.sentence_index = sentence_index;
  span.keyword = keyword_index;
  span.start = start;
  span.end = start + length;
  span.half_width = length / 2;
  return span;
}

}  // namespace aesadv

#pragma once

#include <map>
#include <string>
#include <vector>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"

namespace aesadv {

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<Vector> centroids;
  // Sum of squared distances after each assignment step; non-increasing.
  std::vector<double> distortion;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kKMeansMaxIterations = 100;

// Lloyd's algorithm from farthest-point initialisation. The first centre is
// chosen by `seed`; each further centre is the point farthest from the
// centres so far (lowest index on ties). Stops when no assignment changes
// or after kKMeansMaxIterations. An empty cluster is re-seeded with the
// point farthest from its current centroid.
KMeansResult kmeans(const std::vector<Vector>& vectors, std::size_t k, std::uint64_t seed, bool parallel = true);

struct SentenceSelection {
  std::string essay_id;
  std::vector<std::size_t> selected;  // strictly increasing
  std::size_t k = 0;
};

// max(1, round(sentence_ratio * sentence_count)), capped at the count.
std::size_t default_sentence_count(std::size_t sentence_count, double sentence_ratio);

// Embeds each sentence, clusters into k groups and keeps, per centroid, the
// sentence nearest to it (lowest index on ties).
SentenceSelection select_sentences(const Essay& essay, const TokenizedEssay& tokens, const EmbeddingBackend& embedder,
                                   std::size_t k, std::uint64_t seed);

// Sentence-scoped TF-IDF: each sentence of the essay is one document.
class TfidfStats {
 public:
  explicit TfidfStats(const TokenizedEssay& essay);

  std::size_t sentence_count() const { return term_freq_.size(); }
  std::size_t df(const std::string& term) const;
  std::size_t tf(const std::string& term, std::size_t sentence) const;
  // tf * log((1 + S) / (1 + df)) with lower-cased terms.
  double score(const std::string& term, std::size_t sentence) const;

 private:
  std::map<std::string, std::size_t> doc_freq_;
  std::vector<std::map<std::string, std::size_t>> term_freq_;
};

bool is_stopword(std::string_view lowercase_word);

// Position of the highest TF-IDF token in the sentence, skipping stopwords
// unless every token is one. Earliest position wins ties.
std::size_t keyword(const Sentence& sentence, const TfidfStats& stats);

struct PhraseSpan {
  std::size_t sentence_index = 0;
  std::size_t keyword = 0;
  std::size_t start = 0;  // half-open token range
  std::size_t end = 0;
  std::size_t half_width = 0;

  std::size_t length() const { return end - start; }
};

// s[i - N : i + N + 1] clipped to the sentence.
PhraseSpan phrase_window(std::size_t sentence_length, std::size_t keyword_index, std::size_t half_width,
                         std::size_t sentence_index = 0);

// Span of round(ratio * length) tokens (at least one) around the keyword.
// The keyword sits at the centre, one token left of centre for even
// lengths, and the span slides inward at sentence edges so it keeps its
// length. half_width is length / 2, the N of the unclipped symmetric window.
PhraseSpan ratio_window(std::size_t sentence_length, std::size_t keyword_index, double generation_ratio,
                        std::size_t sentence_index = 0);

}  // namespace aesadv

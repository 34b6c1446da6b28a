#pragma once

// Shared test helpers: independent oracles, fake backends and small random
// generators. Nothing here calls into the code under test except to build
// inputs.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "aesadv/backends.hpp"
#include "aesadv/corpus.hpp"
#include "aesadv/rng.hpp"

namespace testing {

using aesadv::Essay;
using aesadv::ScoreScale;

// QWK straight from the definition: build the K x K observed matrix O and
// the chance matrix E from the marginals, both as probabilities, then
// kappa = (P_o - P_e) / (1 - P_e) with agreement weights 1 - w_ij.
inline double qwk_direct(const std::vector<int>& a, const std::vector<int>& b, int lo, int hi) {
  const int k = hi - lo + 1;
  const double n = static_cast<double>(a.size());
  std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
  for (std::size_t t = 0; t < a.size(); ++t) o[a[t] - lo][b[t] - lo] += 1.0 / n;
  std::vector<double> ra(k, 0.0), rb(k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      ra[i] += o[i][j];
      rb[j] += o[i][j];
    }
  }
  double po = 0.0, pe = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double agree = 1.0 - double((i - j) * (i - j)) / double((k - 1) * (k - 1));
      po += agree * o[i][j];
      pe += agree * ra[i] * rb[j];
    }
  }
  if (pe == 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

inline Essay make_essay(std::string id, int prompt, int score, std::string text = "A short essay. It has words.") {
  Essay e;
  e.id = std::move(id);
  e.prompt_id = prompt;
  e.gold_score = score;
  e.text = std::move(text);
  return e;
}

// Corpus with `counts[i]` essays of score lo + i on one prompt.
inline aesadv::Corpus class_corpus(const std::vector<std::size_t>& counts, int lo = 1, int prompt = 1) {
  aesadv::Corpus c({{prompt, ScoreScale{prompt, lo, lo + static_cast<int>(counts.size()) - 1}}});
  std::size_t id = 0;
  for (std::size_t cls = 0; cls < counts.size(); ++cls) {
    for (std::size_t i = 0; i < counts[cls]; ++i) {
      c.add(make_essay("e" + std::to_string(id++), prompt, lo + static_cast<int>(cls)));
    }
  }
  return c;
}

// Embeds each text as (length, count of 'a', 1): deterministic, cheap.
class FakeEmbedder final : public aesadv::EmbeddingBackend {
 public:
  std::vector<aesadv::Vector> embed(std::span<const std::string> texts) const override {
    std::vector<aesadv::Vector> out;
    for (const auto& t : texts) {
      double a = 0;
      for (char ch : t) a += (ch == 'a');
      out.push_back({static_cast<double>(t.size()), a, 1.0});
    }
    return out;
  }
};

// Returns scripted candidates regardless of the request.
class ScriptedInfiller final : public aesadv::InfillBackend {
 public:
  explicit ScriptedInfiller(std::vector<aesadv::Tokens> fills) : fills_(std::move(fills)) {}
  std::vector<aesadv::Tokens> infill(const aesadv::InfillRequest& req) const override {
    std::vector<aesadv::Tokens> out;
    for (const auto& f : fills_) {
      if (out.size() < req.num_candidates && f.size() <= req.max_new_tokens) out.push_back(f);
    }
    return out;
  }

 private:
  std::vector<aesadv::Tokens> fills_;
};

// Probability depends only on (class, candidate word) through a table;
// unknown pairs get `fallback`.
class TableCmlm final : public aesadv::CmlmBackend {
 public:
  TableCmlm(std::map<std::pair<int, std::string>, double> table, double fallback)
      : table_(std::move(table)), fallback_(fallback) {}
  double token_prob(int label, std::span<const std::string>, std::size_t, std::string_view cand) const override {
    auto it = table_.find({label, std::string(cand)});
    return it == table_.end() ? fallback_ : it->second;
  }

 private:
  std::map<std::pair<int, std::string>, double> table_;
  double fallback_;
};

// Random integers in [lo, hi].
inline int rand_int(aesadv::Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline std::string random_word(aesadv::Rng& rng) {
  static const char* pool[] = {"apple", "river", "stone", "light", "music", "paper", "cloud", "green",
                               "quick", "table", "dream", "field", "north", "glass", "voice", "story"};
  return pool[rng.below(16)];
}

// A random essay of `sentences` sentences of 3..12 words.
inline std::string random_text(aesadv::Rng& rng, std::size_t sentences) {
  std::string out;
  for (std::size_t s = 0; s < sentences; ++s) {
    const int n = rand_int(rng, 3, 12);
    for (int w = 0; w < n; ++w) {
      if (!out.empty()) out += ' ';
      out += random_word(rng);
    }
    out += '.';
  }
  return out;
}

inline bool relative_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing

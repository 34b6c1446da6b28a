#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace aesadv {

using WordId = std::uint32_t;

// Lower-cased word inventory. Ids 0..2 are reserved for the unknown word and
// the sentence boundary markers.
class Vocabulary {
 public:
  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;
  static constexpr WordId kFirstWord = 3;

  Vocabulary();

  WordId add(std::string_view word);
  WordId id(std::string_view word) const;  // kUnk when absent
  const std::string& word(WordId id) const { return words_[id]; }
  std::size_t size() const { return words_.size(); }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

// Interpolated Witten-Bell n-gram model over a fixed vocabulary whose
// unigram level is add-alpha smoothed, so every word has non-zero mass.
// Predictable events are every id except kBos.
class NgramModel {
 public:
  NgramModel(int order, double alpha, std::size_t vocab_size);

  // Counts one sentence, padded with order-1 kBos and a closing kEos.
  void add_sentence(std::span<const WordId> words);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::uint64_t token_count() const;

  // P(word | history); only the last order-1 ids of `history` matter.
  double prob(WordId word, std::span<const WordId> history) const;
  // Raw count of `word` at the unigram level.
  std::uint64_t unigram_count(WordId word) const;

  // Words seen after the longest matching suffix of `history`, backing off
  // to shorter suffixes until at least `min_count` are gathered.
  std::vector<WordId> followers(std::span<const WordId> history, std::size_t min_count) const;

  nlohmann::json to_json() const;
  static NgramModel from_json(const nlohmann::json& j);

  // Order-independent digest of the counts; equal models hash equal.
  std::uint64_t fingerprint() const;

 private:
  struct ContextStats {
    std::uint64_t total = 0;
    std::unordered_map<WordId, std::uint32_t> followers;
  };
  using Key = std::u32string;

  const ContextStats* stats(std::size_t length, std::span<const WordId> history) const;

  int order_;
  double alpha_;
  std::size_t vocab_size_;
  // levels_[k] maps a k-word context to the words that followed it.
  std::vector<std::unordered_map<Key, ContextStats>> levels_;
};

}  // namespace aesadv

#include "aesadv/ngram.hpp"

#include <algorithm>
#include <set>

#include "aesadv/checksum.hpp"
#include "aesadv/error.hpp"

namespace aesadv {

Vocabulary::Vocabulary() : words_{"<unk>", "<s>", "</s>"} {
  for (WordId i = 0; i < words_.size(); ++i) ids_.emplace(words_[i], i);
}

WordId Vocabulary::add(std::string_view word) {
  auto [it, inserted] = ids_.try_emplace(std::string(word), static_cast<WordId>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

WordId Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

nlohmann::json Vocabulary::to_json() const {
  return nlohmann::json(std::vector<std::string>(words_.begin() + kFirstWord, words_.end()));
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  for (const auto& w : j) v.add(w.get<std::string>());
  return v;
}

NgramModel::NgramModel(int order, double alpha, std::size_t vocab_size)
    : order_(order), alpha_(alpha), vocab_size_(vocab_size), levels_(static_cast<std::size_t>(std::max(order, 1))) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("smoothing alpha must be > 0");
  if (vocab_size <= Vocabulary::kFirstWord) throw ConfigError("vocabulary is empty");
}

void NgramModel::add_sentence(std::span<const WordId> words) {
  const std::size_t pad = static_cast<std::size_t>(order_ - 1);
  std::vector<WordId> seq(pad, Vocabulary::kBos);
  seq.insert(seq.end(), words.begin(), words.end());
  seq.push_back(Vocabulary::kEos);
  for (std::size_t i = pad; i < seq.size(); ++i) {
    const WordId w = seq[i];
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      Key key;
      for (std::size_t j = i - k; j < i; ++j) key.push_back(static_cast<char32_t>(seq[j]));
      auto& st = levels_[k][key];
      ++st.total;
      ++st.followers[w];
    }
  }
}

std::uint64_t NgramModel::token_count() const {
  auto it = levels_[0].find(Key());
  return it == levels_[0].end() ? 0 : it->second.total;
}

std::uint64_t NgramModel::unigram_count(WordId word) const {
  auto it = levels_[0].find(Key());
  if (it == levels_[0].end()) return 0;
  auto f = it->second.followers.find(word);
  return f == it->second.followers.end() ? 0 : f->second;
}

const NgramModel::ContextStats* NgramModel::stats(std::size_t length, std::span<const WordId> history) const {
  if (length > history.size() || length >= levels_.size()) return nullptr;
  Key key;
  for (std::size_t j = history.size() - length; j < history.size(); ++j) key.push_back(static_cast<char32_t>(history[j]));
  auto it = levels_[length].find(key);
  return it == levels_[length].end() ? nullptr : &it->second;
}

double NgramModel::prob(WordId word, std::span<const WordId> history) const {
  const double predictable = static_cast<double>(vocab_size_ - 1);  // everything but kBos
  double p = (static_cast<double>(unigram_count(word)) + alpha_) /
             (static_cast<double>(token_count()) + alpha_ * predictable);
  const std::size_t max_len = std::min(history.size(), levels_.size() - 1);
  for (std::size_t k = 1; k <= max_len; ++k) {
    const ContextStats* st = stats(k, history);
    if (st == nullptr || st->total == 0) break;
    const auto f = st->followers.find(word);
    const double c = f == st->followers.end() ? 0.0 : f->second;
    const double types = static_cast<double>(st->followers.size());
    p = (c + types * p) / (static_cast<double>(st->total) + types);
  }
  return p;
}

std::vector<WordId> NgramModel::followers(std::span<const WordId> history, std::size_t min_count) const {
  std::set<WordId> out;
  const std::size_t max_len = std::min(history.size(), levels_.size() - 1);
  for (std::size_t k = max_len + 1; k-- > 0;) {
    if (const ContextStats* st = stats(k, history)) {
      for (const auto& [w, c] : st->followers) out.insert(w);
    }
    if (out.size() >= min_count) break;
  }
  return {out.begin(), out.end()};
}

nlohmann::json NgramModel::to_json() const {
  // Only the top level is stored; lower levels are its marginals.
  std::vector<std::vector<std::uint64_t>> rows;
  for (const auto& [key, st] : levels_.back()) {
    for (const auto& [w, c] : st.followers) {
      std::vector<std::uint64_t> row(key.begin(), key.end());
      row.push_back(w);
      row.push_back(c);
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end());
  return {{"order", order_}, {"alpha", alpha_}, {"vocab_size", vocab_size_}, {"ngrams", rows}};
}

NgramModel NgramModel::from_json(const nlohmann::json& j) {
  NgramModel m(j.at("order").get<int>(), j.at("alpha").get<double>(), j.at("vocab_size").get<std::size_t>());
  const std::size_t width = static_cast<std::size_t>(m.order_) + 1;
  for (const auto& row_json : j.at("ngrams")) {
    const auto row = row_json.get<std::vector<std::uint64_t>>();
    if (row.size() != width) throw DataError("n-gram row has wrong width");
    const WordId w = static_cast<WordId>(row[width - 2]);
    const auto c = static_cast<std::uint32_t>(row[width - 1]);
    if (w >= m.vocab_size_) throw DataError("n-gram word id out of range");
    for (std::size_t k = 0; k < m.levels_.size(); ++k) {
      Key key;
      for (std::size_t i = width - 2 - k; i < width - 2; ++i) key.push_back(static_cast<char32_t>(row[i]));
      auto& st = m.levels_[k][key];
      st.total += c;
      st.followers[w] += c;
    }
  }
  return m;
}

std::uint64_t NgramModel::fingerprint() const {
  Fnv1a h;
  h.update(to_json().dump());
  return h.value();
}

}  // namespace aesadv

#include "aesadv/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aesadv/checksum.hpp"
#include "aesadv/error.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

void BaselineParams::validate() const {
  if (dim < 2) throw ConfigError("embedding dimension must be >= 2");
  if (ngram_order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("smoothing alpha must be > 0");
  if (cooccurrence_window < 1) throw ConfigError("co-occurrence window must be >= 1");
}

const NgramModel& BaselineModels::class_model(int label) const {
  auto it = class_models.find(label);
  return it == class_models.end() ? infill_model : it->second;
}

std::vector<WordId> BaselineModels::encode(std::span<const std::string> tokens) const {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(lowercase(t)));
  return ids;
}

namespace {

std::vector<std::vector<WordId>> sentences_of(const Essay& essay, Vocabulary& vocab) {
  std::vector<std::vector<WordId>> out;
  for (const auto& s : tokenize(essay).sentences) {
    if (s.tokens.empty()) continue;
    std::vector<WordId> ids;
    for (const auto& t : s.tokens) ids.push_back(vocab.add(lowercase(t.text)));
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<double> project_cooccurrence(const std::vector<std::vector<std::vector<WordId>>>& essays,
                                         std::size_t vocab_size, const BaselineParams& params) {
  const std::size_t d = static_cast<std::size_t>(params.dim);
  const auto window = static_cast<std::size_t>(params.cooccurrence_window);
  std::vector<std::map<WordId, double>> counts(vocab_size);
  for (const auto& essay : essays) {
    for (const auto& s : essay) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t lo = i >= window ? i - window : 0;
        const std::size_t hi = std::min(s.size(), i + window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j != i) counts[s[i]][s[j]] += 1.0;
        }
      }
    }
  }
  // Sparse random projection with entries +-1/sqrt(d).
  Rng rng(params.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> projection(vocab_size * d);
  for (auto& x : projection) x = (rng.next_u64() >> 63) ? scale : -scale;

  std::vector<double> table(vocab_size * d, 0.0);
  for (std::size_t w = Vocabulary::kFirstWord; w < vocab_size; ++w) {
    double* row = table.data() + w * d;
    for (const auto& [ctx, c] : counts[w]) {
      const double weight = std::log1p(c);
      const double* r = projection.data() + static_cast<std::size_t>(ctx) * d;
      for (std::size_t k = 0; k < d; ++k) row[k] += weight * r[k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) norm += row[k] * row[k];
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < d; ++k) row[k] /= norm;
    }
  }
  return table;
}

}  // namespace

BaselineModels train_baselines(const Corpus& corpus, const BaselineParams& params) {
  params.validate();
  if (corpus.empty()) throw DataError("cannot train baseline models on an empty corpus");

  Vocabulary vocab;
  std::vector<std::vector<std::vector<WordId>>> encoded;
  encoded.reserve(corpus.size());
  for (const auto& e : corpus.essays()) encoded.push_back(sentences_of(e, vocab));

  NgramModel global(params.ngram_order, params.alpha, vocab.size());
  for (const auto& essay : encoded) {
    for (const auto& s : essay) global.add_sentence(s);
  }

  std::set<int> labels;
  for (const auto& [prompt, scale] : corpus.scales()) {
    for (int y = scale.min_score; y <= scale.max_score; ++y) labels.insert(y);
  }
  std::map<int, NgramModel> class_models;
  std::vector<int> fallback;
  for (int y : labels) {
    NgramModel m(params.ngram_order, params.alpha, vocab.size());
    bool any = false;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus.essays()[i].gold_score != y) continue;
      any = true;
      for (const auto& s : encoded[i]) m.add_sentence(s);
    }
    if (any) {
      class_models.emplace(y, std::move(m));
    } else {
      fallback.push_back(y);
    }
  }

  auto table = project_cooccurrence(encoded, vocab.size(), params);
  return BaselineModels{params, std::move(vocab), std::move(table), std::move(global), std::move(class_models),
                        std::move(fallback)};
}

nlohmann::json BaselineModels::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [y, m] : class_models) classes[std::to_string(y)] = m.to_json();
  return {{"params",
           {{"dim", params.dim},
            {"ngram_order", params.ngram_order},
            {"alpha", params.alpha},
            {"seed", params.seed},
            {"cooccurrence_window", params.cooccurrence_window}}},
          {"vocab", vocab.to_json()},
          {"embeddings", embeddings},
          {"infill_model", infill_model.to_json()},
          {"class_models", classes},
          {"fallback_classes", fallback_classes}};
}

BaselineModels BaselineModels::from_json(const nlohmann::json& j) {
  try {
    const auto& p = j.at("params");
    BaselineParams params{p.at("dim").get<int>(), p.at("ngram_order").get<int>(), p.at("alpha").get<double>(),
                          p.at("seed").get<std::uint64_t>(), p.at("cooccurrence_window").get<int>()};
    params.validate();
    std::map<int, NgramModel> classes;
    for (const auto& [key, m] : j.at("class_models").items()) classes.emplace(std::stoi(key), NgramModel::from_json(m));
    BaselineModels out{params,
                       Vocabulary::from_json(j.at("vocab")),
                       j.at("embeddings").get<std::vector<double>>(),
                       NgramModel::from_json(j.at("infill_model")),
                       std::move(classes),
                       j.at("fallback_classes").get<std::vector<int>>()};
    if (out.embeddings.size() != out.vocab.size() * static_cast<std::size_t>(params.dim)) {
      throw DataError("embedding table does not match vocabulary size");
    }
    return out;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed baseline model file: ") + ex.what());
  }
}

std::string BaselineModels::fingerprint() const { return checksum_hex(to_json().dump()); }

// ---------------------------------------------------------------------------

Vector BaselineEmbedder::embed_tokens(std::span<const std::string> tokens) const {
  const std::size_t d = static_cast<std::size_t>(models_->params.dim);
  Vector mean(d, 0.0);
  if (tokens.empty()) return mean;
  for (WordId id : models_->encode(tokens)) {
    const auto row = models_->word_vector(id);
    for (std::size_t k = 0; k < d; ++k) mean[k] += row[k];
  }
  for (auto& x : mean) x /= static_cast<double>(tokens.size());
  return mean;
}

std::vector<Vector> BaselineEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Tokens words;
    for (const auto& s : tokenize_text(text).sentences) {
      for (const auto& t : s.tokens) words.push_back(t.text);
    }
    out.push_back(embed_tokens(words));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Hypothesis {
  std::vector<WordId> seq;
  double logp = 0.0;
  double score = 0.0;
};

bool lexicographically_less(const std::vector<WordId>& a, const std::vector<WordId>& b, const Vocabulary& vocab) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [&](WordId x, WordId y) { return vocab.word(x) < vocab.word(y); });
}

}  // namespace

std::vector<Tokens> BaselineInfiller::infill(const InfillRequest& request) const {
  if (request.mask_start + request.mask_len > request.tokens.size()) {
    throw InvariantViolation("infill mask span exceeds sentence length");
  }
  const auto& model = models_->infill_model;
  const auto& vocab = models_->vocab;
  const std::size_t context = static_cast<std::size_t>(model.order() - 1);
  const std::size_t width = std::max<std::size_t>(request.num_candidates, 1);

  std::vector<WordId> history(context, Vocabulary::kBos);
  const auto left = models_->encode(std::span(request.tokens).first(request.mask_start));
  history.insert(history.end(), left.begin(), left.end());
  auto right = models_->encode(std::span(request.tokens).subspan(request.mask_start + request.mask_len));
  right.push_back(Vocabulary::kEos);
  const std::size_t closing = std::min(context, right.size());

  std::vector<Hypothesis> beam{Hypothesis{}};
  std::vector<Hypothesis> completed;
  std::vector<WordId> hist;
  for (std::size_t t = 1; t <= request.max_new_tokens; ++t) {
    std::vector<Hypothesis> next;
    for (const auto& hyp : beam) {
      hist = history;
      hist.insert(hist.end(), hyp.seq.begin(), hyp.seq.end());
      for (WordId w : model.followers(hist, width)) {
        if (w < Vocabulary::kFirstWord) continue;
        Hypothesis h{hyp.seq, hyp.logp + std::log(model.prob(w, hist)), 0.0};
        h.seq.push_back(w);
        next.push_back(std::move(h));
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end(), [&](const Hypothesis& a, const Hypothesis& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return lexicographically_less(a.seq, b.seq, vocab);
    });
    if (next.size() > width) next.resize(width);
    beam = std::move(next);
    for (auto hyp : beam) {
      hist = history;
      hist.insert(hist.end(), hyp.seq.begin(), hyp.seq.end());
      double tail = 0.0;
      for (std::size_t j = 0; j < closing; ++j) {
        tail += std::log(model.prob(right[j], hist));
        hist.push_back(right[j]);
      }
      hyp.score = (hyp.logp + tail) / static_cast<double>(t + closing);
      completed.push_back(std::move(hyp));
    }
  }
  std::sort(completed.begin(), completed.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return lexicographically_less(a.seq, b.seq, vocab);
  });
  std::vector<Tokens> out;
  for (const auto& hyp : completed) {
    if (out.size() == request.num_candidates) break;
    Tokens words;
    for (WordId w : hyp.seq) words.push_back(vocab.word(w));
    out.push_back(std::move(words));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> BaselineCmlm::distribution(int class_label, std::span<const std::string> tokens,
                                               std::size_t masked_index) const {
  if (masked_index >= tokens.size()) throw InvariantViolation("masked index outside sentence");
  const auto& model = models_->class_model(class_label);
  const std::size_t context = static_cast<std::size_t>(model.order() - 1);
  const std::size_t vocab_size = models_->vocab.size();

  std::vector<WordId> seq(context, Vocabulary::kBos);
  const auto ids = models_->encode(tokens);
  seq.insert(seq.end(), ids.begin(), ids.end());
  seq.push_back(Vocabulary::kEos);
  const std::size_t pos = masked_index + context;
  const std::size_t tail = std::min(context, seq.size() - pos - 1);

  std::vector<double> logits(vocab_size, -std::numeric_limits<double>::infinity());
  double best = -std::numeric_limits<double>::infinity();
  for (WordId c = 0; c < vocab_size; ++c) {
    if (c == Vocabulary::kBos || c == Vocabulary::kEos) continue;
    seq[pos] = c;
    double s = std::log(model.prob(c, std::span(seq).subspan(pos - context, context)));
    for (std::size_t j = 1; j <= tail; ++j) {
      s += std::log(model.prob(seq[pos + j], std::span(seq).subspan(pos + j - context, context)));
    }
    logits[c] = s;
    best = std::max(best, s);
  }
  double total = 0.0;
  for (double l : logits) {
    if (std::isfinite(l)) total += std::exp(l - best);
  }
  std::vector<double> probs(vocab_size, 0.0);
  for (WordId c = 0; c < vocab_size; ++c) {
    if (std::isfinite(logits[c])) probs[c] = std::exp(logits[c] - best) / total;
  }
  return probs;
}

double BaselineCmlm::token_prob(int class_label, std::span<const std::string> tokens, std::size_t masked_index,
                                std::string_view candidate) const {
  const auto probs = distribution(class_label, tokens, masked_index);
  return probs[models_->vocab.id(lowercase(candidate))];
}

Backends make_baseline_backends(std::shared_ptr<const BaselineModels> models) {
  return Backends{std::make_shared<BaselineEmbedder>(models), std::make_shared<BaselineInfiller>(models),
                  std::make_shared<BaselineCmlm>(models)};
}

}  // namespace aesadv

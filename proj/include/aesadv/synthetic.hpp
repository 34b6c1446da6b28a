#pragma once

// Offline stand-in for a licensed essay dataset. Essays draw from shared
// function and topic words plus four graded "register" vocabularies; an
// essay's latent quality (its score plus noise) sets the register mix and,
// when length_effect is non-zero, its length.

#include <cstdint>
#include <string>
#include <vector>

#include "aesadv/corpus.hpp"

namespace aesadv {

struct SyntheticSpec {
  std::size_t essays = 300;
  int prompt_id = 1;
  int min_score = 1;
  std::vector<double> class_shares = {0.15, 0.35, 0.35, 0.15};  // one per score, ascending
  double quality_noise = 0.6;
  double register_share = 0.0;  // chance that a filler word is a register word
  std::size_t phrase_words = 4;  // longest register run (top of the scale); the bottom gets one word
  std::size_t min_sentences = 5;
  std::size_t sentence_spread = 3;  // sentences = min + uniform{0..spread} + length effect
  double length_effect = 0.0;       // extra sentences per quality point
  std::uint64_t seed = 7;

  void validate() const;
};

// ASAP-style tab-separated text: essay_id, essay_set, essay,
// rater1_domain1, rater2_domain1, domain1_score.
std::string synthetic_tsv(const SyntheticSpec& spec);
Corpus synthetic_corpus(const SyntheticSpec& spec);

}  // namespace aesadv

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aesadv {

struct ScoreScale {
  int prompt_id = 0;
  int min_score = 0;
  int max_score = 1;

  int num_classes() const { return max_score - min_score + 1; }
  bool contains(int score) const { return score >= min_score && score <= max_score; }
  std::size_t class_index(int score) const { return static_cast<std::size_t>(score - min_score); }
  // Throws ConfigError unless min < max.
  void validate() const;

  friend bool operator==(const ScoreScale&, const ScoreScale&) = default;
};

enum class Provenance { kOriginal, kAdversarial };

struct Essay {
  std::string id;
  int prompt_id = 0;
  std::string text;
  std::vector<int> rater_scores;
  int gold_score = 0;
  Provenance provenance = Provenance::kOriginal;
  std::string source_id;  // set iff provenance == kAdversarial

  bool is_adversarial() const { return provenance == Provenance::kAdversarial; }
};

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the essay text
  std::size_t end = 0;
};

struct Sentence {
  std::size_t index = 0;
  std::vector<Token> tokens;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> words() const;
};

struct TokenizedEssay {
  std::string essay_id;
  std::vector<Sentence> sentences;

  std::size_t token_count() const;
};

// Immutable-after-build collection of essays plus the score scale of every
// prompt they belong to.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::map<int, ScoreScale> scales) : scales_(std::move(scales)) {}

  // Validates the essay against its prompt's scale and id uniqueness.
  void add(Essay essay);
  void set_scale(const ScoreScale& scale);

  const std::vector<Essay>& essays() const { return essays_; }
  const std::map<int, ScoreScale>& scales() const { return scales_; }
  const ScoreScale& scale(int prompt_id) const;
  std::size_t size() const { return essays_.size(); }
  bool empty() const { return essays_.empty(); }
  const Essay* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::vector<int> prompts() const;
  Corpus only_prompt(int prompt_id) const;
  // Gold-score histogram.
  std::map<int, std::size_t> class_counts() const;
  std::vector<std::string> ids() const;

  // Checks every adversarial essay's source_id resolves to an original in
  // this corpus or in `sources` when given.
  void validate_sources(const Corpus* sources = nullptr) const;

 private:
  std::vector<Essay> essays_;
  std::map<int, ScoreScale> scales_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class TextEncoding { kCp1252, kUtf8 };

// Decodes raw bytes to UTF-8, replacing invalid bytes with U+FFFD.
std::string decode_text(std::string_view raw, TextEncoding encoding);

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct IngestOptions {
  std::optional<std::set<int>> prompt_filter;
  TextEncoding encoding = TextEncoding::kCp1252;
  std::map<int, ScoreScale> scale_overrides;
};

struct IngestResult {
  Corpus corpus;
  std::vector<RecordError> errors;
};

// Reads an ASAP-style tab-separated file. Malformed rows are skipped and
// reported; a missing required column throws DataError.
IngestResult ingest_tsv(const std::filesystem::path& path, const IngestOptions& options = {});
IngestResult ingest_tsv_text(std::string_view contents, const IngestOptions& options = {});

struct SplitSpec {
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const;
};

struct Split {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Deterministic three-way split. Part sizes are floor(n * fraction) for
// validation and test with the remainder going to train. When stratified,
// each (prompt, gold score) stratum is spread so that every part's class
// count is within one essay of its proportional share.
Split split(const Corpus& corpus, const SplitSpec& spec);

// Split with a fixed, externally supplied test set. The remaining essays
// are divided into train and validation in the ratio of the spec's
// train and validation fractions.
Split split_with_fixed_test(const Corpus& corpus, const std::set<std::string>& test_ids,
                            const SplitSpec& spec);

// Sentences end at '.', '!' or '?' followed by whitespace. Tokens are
// maximal runs of ASCII letters, digits, apostrophes, or non-ASCII bytes.
// Abbreviations such as "e.g." therefore end a sentence.
TokenizedEssay tokenize(const Essay& essay);
TokenizedEssay tokenize_text(std::string_view text, std::string essay_id = {});

std::string lowercase(std::string_view word);

// JSON-lines snapshot, one essay per line.
void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_jsonl(const std::filesystem::path& path, const std::map<int, ScoreScale>& scales);
void write_scales(const std::map<int, ScoreScale>& scales, const std::filesystem::path& path);
std::map<int, ScoreScale> read_scales(const std::filesystem::path& path);

}  // namespace aesadv

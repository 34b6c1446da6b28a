#include "aesadv/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "aesadv/error.hpp"
#include "aesadv/json_io.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

void ScoreScale::validate() const {
  if (min_score >= max_score) {
    throw ConfigError("score scale for prompt " + std::to_string(prompt_id) + " needs min < max, got [" +
                      std::to_string(min_score) + ", " + std::to_string(max_score) + "]");
  }
}

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::size_t TokenizedEssay::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; });
}

}  // namespace

void Corpus::set_scale(const ScoreScale& scale) {
  scale.validate();
  scales_[scale.prompt_id] = scale;
}

void Corpus::add(Essay essay) {
  if (essay.id.empty()) throw DataError("essay without id");
  if (is_blank(essay.text)) throw DataError("essay " + essay.id + " has empty text");
  auto it = scales_.find(essay.prompt_id);
  if (it == scales_.end()) {
    throw DataError("essay " + essay.id + " belongs to prompt " + std::to_string(essay.prompt_id) +
                    " with no score scale");
  }
  if (!it->second.contains(essay.gold_score)) {
    throw DataError("essay " + essay.id + " gold score " + std::to_string(essay.gold_score) +
                    " outside scale [" + std::to_string(it->second.min_score) + ", " +
                    std::to_string(it->second.max_score) + "]");
  }
  if (essay.is_adversarial() && essay.source_id.empty()) {
    throw DataError("adversarial essay " + essay.id + " has no source id");
  }
  if (index_.count(essay.id)) throw DataError("duplicate essay id " + essay.id);
  index_.emplace(essay.id, essays_.size());
  essays_.push_back(std::move(essay));
}

const ScoreScale& Corpus::scale(int prompt_id) const {
  auto it = scales_.find(prompt_id);
  if (it == scales_.end()) throw DataError("no score scale for prompt " + std::to_string(prompt_id));
  return it->second;
}

const Essay* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &essays_[it->second];
}

std::vector<int> Corpus::prompts() const {
  std::set<int> seen;
  for (const auto& e : essays_) seen.insert(e.prompt_id);
  return {seen.begin(), seen.end()};
}

Corpus Corpus::only_prompt(int prompt_id) const {
  Corpus out;
  if (auto it = scales_.find(prompt_id); it != scales_.end()) out.scales_[prompt_id] = it->second;
  for (const auto& e : essays_) {
    if (e.prompt_id == prompt_id) out.add(e);
  }
  return out;
}

std::map<int, std::size_t> Corpus::class_counts() const {
  std::map<int, std::size_t> counts;
  for (const auto& e : essays_) ++counts[e.gold_score];
  return counts;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(essays_.size());
  for (const auto& e : essays_) out.push_back(e.id);
  return out;
}

void Corpus::validate_sources(const Corpus* sources) const {
  for (const auto& e : essays_) {
    if (!e.is_adversarial()) continue;
    const Essay* src = find(e.source_id);
    if (src == nullptr && sources != nullptr) src = sources->find(e.source_id);
    if (src == nullptr || src->is_adversarial()) {
      throw InvariantViolation("adversarial essay " + e.id + " references unknown original " + e.source_id);
    }
  }
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

// Windows-1252 code points for bytes 0x80..0x9F; 0 marks undefined bytes.
constexpr std::array<char32_t, 32> kCp1252High = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

constexpr char32_t kReplacement = 0xFFFD;

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes one UTF-8 sequence at `pos`. Returns the code point and advances
// `pos`; invalid input yields U+FFFD and consumes one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
  if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacement;
  }
  pos += len;
  return cp;
}

}  // namespace

std::string decode_text(std::string_view raw, TextEncoding encoding) {
  std::string out;
  out.reserve(raw.size());
  if (encoding == TextEncoding::kCp1252) {
    for (unsigned char c : raw) {
      if (c < 0x80) {
        out.push_back(static_cast<char>(c));
      } else if (c < 0xA0) {
        const char32_t cp = kCp1252High[c - 0x80];
        append_utf8(out, cp == 0 ? kReplacement : cp);
      } else {
        append_utf8(out, c);
      }
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos < raw.size()) append_utf8(out, next_code_point(raw, pos));
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

IngestResult ingest_tsv_text(std::string_view contents, const IngestOptions& options) {
  IngestResult result;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= contents.size()) return false;
    auto nl = contents.find('\n', pos);
    if (nl == std::string_view::npos) nl = contents.size();
    line = contents.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    return true;
  };

  std::string_view header_line;
  if (!next_line(header_line)) throw DataError("empty input: missing header row");
  const auto header = split_tabs(header_line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(trim(header[i])), i);
  for (const char* required : {"essay_id", "essay_set", "essay", "domain1_score"}) {
    if (!col.count(required)) throw DataError(std::string("missing required column '") + required + "'");
  }
  const std::size_t c_id = col.at("essay_id");
  const std::size_t c_set = col.at("essay_set");
  const std::size_t c_text = col.at("essay");
  const std::size_t c_gold = col.at("domain1_score");
  std::vector<std::size_t> rater_cols;
  for (const char* rater : {"rater1_domain1", "rater2_domain1", "rater3_domain1"}) {
    if (auto it = col.find(rater); it != col.end()) rater_cols.push_back(it->second);
  }
  const std::size_t needed = std::max({c_id, c_set, c_text, c_gold}) + 1;

  std::vector<Essay> accepted;
  std::string_view line;
  while (next_line(line)) {
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    auto reject = [&](std::string message) { result.errors.push_back({line_no, std::move(message)}); };
    if (fields.size() < needed) {
      reject("expected at least " + std::to_string(needed) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    const auto prompt = parse_int(fields[c_set]);
    if (!prompt) {
      reject("essay_set is not an integer");
      continue;
    }
    if (options.prompt_filter && !options.prompt_filter->count(*prompt)) continue;
    const auto gold = parse_int(fields[c_gold]);
    if (!gold) {
      reject("domain1_score is not an integer");
      continue;
    }
    const std::string_view id = trim(fields[c_id]);
    if (id.empty()) {
      reject("empty essay_id");
      continue;
    }
    std::string text = decode_text(trim(fields[c_text]), options.encoding);
    if (is_blank(text)) {
      reject("empty essay text");
      continue;
    }
    Essay e;
    e.id = std::string(id);
    e.prompt_id = *prompt;
    e.text = std::move(text);
    e.gold_score = *gold;
    for (auto rc : rater_cols) {
      if (rc < fields.size()) {
        if (auto r = parse_int(fields[rc])) e.rater_scores.push_back(*r);
      }
    }
    accepted.push_back(std::move(e));
  }

  std::map<int, ScoreScale> scales;
  for (const auto& e : accepted) {
    auto [it, inserted] = scales.try_emplace(e.prompt_id, ScoreScale{e.prompt_id, e.gold_score, e.gold_score});
    if (!inserted) {
      it->second.min_score = std::min(it->second.min_score, e.gold_score);
      it->second.max_score = std::max(it->second.max_score, e.gold_score);
    }
  }
  for (const auto& [prompt, scale] : options.scale_overrides) {
    if (scales.count(prompt)) scales[prompt] = scale;
  }
  for (const auto& [prompt, scale] : scales) {
    if (scale.min_score >= scale.max_score) {
      throw DataError("prompt " + std::to_string(prompt) + " has a single observed score " +
                      std::to_string(scale.min_score) + "; supply a scale override");
    }
    result.corpus.set_scale(scale);
  }
  for (auto& e : accepted) {
    if (!result.corpus.scale(e.prompt_id).contains(e.gold_score)) {
      result.errors.push_back({0, "essay " + e.id + " gold score outside configured scale"});
      continue;
    }
    if (result.corpus.contains(e.id)) {
      result.errors.push_back({0, "duplicate essay id " + e.id});
      continue;
    }
    result.corpus.add(std::move(e));
  }
  return result;
}

IngestResult ingest_tsv(const std::filesystem::path& path, const IngestOptions& options) {
  if (!std::filesystem::exists(path)) throw DataError("dataset not found: " + path.string());
  return ingest_tsv_text(read_file(path), options);
}

// ---------------------------------------------------------------------------
// Splitting

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f > 0.0) || f >= 1.0) throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

constexpr std::size_t kParts = 3;  // train, val, test

// Tiny Edmonds-Karp max flow over a dense capacity matrix.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : n_(n), cap_(n * n, 0) {}
  void add(std::size_t u, std::size_t v, long long c) { cap_[u * n_ + v] += c; }
  long long flow_on(std::size_t u, std::size_t v) const { return flow_.empty() ? 0 : flow_[u * n_ + v]; }

  long long run(std::size_t s, std::size_t t) {
    flow_.assign(n_ * n_, 0);
    long long total = 0;
    std::vector<std::size_t> parent(n_);
    while (true) {
      std::fill(parent.begin(), parent.end(), n_);
      parent[s] = s;
      std::queue<std::size_t> q;
      q.push(s);
      while (!q.empty() && parent[t] == n_) {
        const auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n_; ++v) {
          if (parent[v] == n_ && residual(u, v) > 0) {
            parent[v] = u;
            q.push(v);
          }
        }
      }
      if (parent[t] == n_) return total;
      long long push = std::numeric_limits<long long>::max();
      for (auto v = t; v != s; v = parent[v]) push = std::min(push, residual(parent[v], v));
      for (auto v = t; v != s; v = parent[v]) {
        flow_[parent[v] * n_ + v] += push;
        flow_[v * n_ + parent[v]] -= push;
      }
      total += push;
    }
  }

 private:
  long long residual(std::size_t u, std::size_t v) const { return cap_[u * n_ + v] - flow_[u * n_ + v]; }
  std::size_t n_;
  std::vector<long long> cap_;
  std::vector<long long> flow_;
};

// Rounds the matrix count(y) * size(p) / n so that every entry is the floor
// or ceiling of its target while row sums equal count(y) and column sums
// equal size(p). Such a rounding always exists for integer margins.
std::vector<std::array<std::size_t, kParts>> controlled_rounding(const std::vector<std::size_t>& counts,
                                                                  const std::array<std::size_t, kParts>& sizes) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  const std::size_t rows = counts.size();
  std::vector<std::array<std::size_t, kParts>> out(rows);
  std::vector<std::array<bool, kParts>> fractional(rows);
  std::vector<long long> row_need(rows);
  std::array<long long, kParts> col_need{};
  for (std::size_t p = 0; p < kParts; ++p) col_need[p] = static_cast<long long>(sizes[p]);
  for (std::size_t y = 0; y < rows; ++y) {
    long long used = 0;
    for (std::size_t p = 0; p < kParts; ++p) {
      const std::size_t num = counts[y] * sizes[p];
      out[y][p] = num / n;
      fractional[y][p] = num % n != 0;
      used += static_cast<long long>(out[y][p]);
      col_need[p] -= static_cast<long long>(out[y][p]);
    }
    row_need[y] = static_cast<long long>(counts[y]) - used;
  }
  // Nodes: 0 source, 1..rows classes, rows+1..rows+3 parts, rows+4 sink.
  const std::size_t source = 0;
  const std::size_t sink = rows + kParts + 1;
  MaxFlow flow(rows + kParts + 2);
  long long demand = 0;
  for (std::size_t y = 0; y < rows; ++y) {
    flow.add(source, 1 + y, row_need[y]);
    demand += row_need[y];
    for (std::size_t p = 0; p < kParts; ++p) {
      if (fractional[y][p]) flow.add(1 + y, 1 + rows + p, 1);
    }
  }
  for (std::size_t p = 0; p < kParts; ++p) flow.add(1 + rows + p, sink, col_need[p]);
  if (flow.run(source, sink) != demand) throw InvariantViolation("stratified split rounding infeasible");
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t p = 0; p < kParts; ++p) {
      if (fractional[y][p] && flow.flow_on(1 + y, 1 + rows + p) > 0) ++out[y][p];
    }
  }
  return out;
}

Split assemble(const Corpus& corpus, const std::array<std::vector<std::size_t>, kParts>& members) {
  Split out{Corpus(corpus.scales()), Corpus(corpus.scales()), Corpus(corpus.scales())};
  std::array<Corpus*, kParts> parts = {&out.train, &out.val, &out.test};
  for (std::size_t p = 0; p < kParts; ++p) {
    auto sorted = members[p];
    std::sort(sorted.begin(), sorted.end());
    for (auto i : sorted) parts[p]->add(corpus.essays()[i]);
  }
  return out;
}

Split partition(const Corpus& corpus, const std::vector<std::size_t>& pool, std::array<std::size_t, kParts> sizes,
                std::uint64_t seed, bool stratified, std::vector<std::size_t> preassigned_test = {}) {
  Rng rng(seed);
  std::array<std::vector<std::size_t>, kParts> members;
  members[2] = std::move(preassigned_test);
  if (!stratified) {
    auto order = pool;
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t at = 0;
    for (std::size_t p : {1, 2}) {
      for (std::size_t k = 0; k < sizes[p]; ++k) members[p].push_back(order[at++]);
    }
    for (; at < order.size(); ++at) members[0].push_back(order[at]);
    return assemble(corpus, members);
  }
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (auto i : pool) {
    const auto& e = corpus.essays()[i];
    strata[{e.prompt_id, e.gold_score}].push_back(i);
  }
  std::vector<std::size_t> counts;
  for (const auto& [key, idx] : strata) counts.push_back(idx.size());
  const auto quota = controlled_rounding(counts, sizes);
  std::size_t row = 0;
  for (auto& [key, idx] : strata) {
    rng.shuffle(std::span<std::size_t>(idx));
    std::size_t at = 0;
    for (std::size_t p : {1, 2, 0}) {
      for (std::size_t k = 0; k < quota[row][p]; ++k) members[p].push_back(idx[at++]);
    }
    ++row;
  }
  return assemble(corpus, members);
}

std::size_t floor_share(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace

Split split(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  if (corpus.empty()) throw DataError("cannot split an empty corpus");
  const std::size_t n = corpus.size();
  const std::size_t n_val = floor_share(n, spec.val_fraction);
  const std::size_t n_test = floor_share(n, spec.test_fraction);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  return partition(corpus, pool, {n - n_val - n_test, n_val, n_test}, spec.seed, spec.stratified);
}

Split split_with_fixed_test(const Corpus& corpus, const std::set<std::string>& test_ids, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> pool;
  std::vector<std::size_t> test;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (test_ids.count(corpus.essays()[i].id) ? test : pool).push_back(i);
  }
  if (pool.empty()) throw DataError("fixed test set leaves no essays for training");
  const double val_share = spec.val_fraction / (spec.train_fraction + spec.val_fraction);
  const std::size_t n_val = floor_share(pool.size(), val_share);
  return partition(corpus, pool, {pool.size() - n_val, n_val, 0}, spec.seed, spec.stratified, std::move(test));
}

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Width in bytes of the word character at `pos`, or 0 if it is not one.
std::size_t word_char_width(std::string_view text, std::size_t pos) {
  const auto c = static_cast<unsigned char>(text[pos]);
  if (c < 0x80) {
    return (std::isalnum(c) || c == '\'') ? 1 : 0;
  }
  std::size_t next = pos;
  const char32_t cp = next_code_point(text, next);
  const std::size_t width = next - pos;
  if (cp == kReplacement) return 0;
  if (cp == 0x2019) return width;  // right single quote used as apostrophe
  if (cp >= 0x2000 && cp <= 0x206F) return 0;  // general punctuation
  if (cp >= 0x00A0 && cp <= 0x00BF) return 0;  // latin-1 symbols
  if (cp == 0x00D7 || cp == 0x00F7) return 0;
  return width;
}

bool is_terminal(unsigned char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::string lowercase(std::string_view word) {
  std::string out(word);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

TokenizedEssay tokenize_text(std::string_view text, std::string essay_id) {
  TokenizedEssay out;
  out.essay_id = std::move(essay_id);

  // Segment boundaries: after a terminal mark that is followed by whitespace.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminal(static_cast<unsigned char>(text[i])) && i + 1 < text.size() &&
        is_space(static_cast<unsigned char>(text[i + 1]))) {
      segments.emplace_back(start, i + 1);
      start = i + 1;
    }
  }
  if (start < text.size()) segments.emplace_back(start, text.size());

  std::vector<Sentence> raw;
  for (auto [b, e] : segments) {
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b == e) continue;
    Sentence s;
    s.begin = b;
    s.end = e;
    std::size_t i = b;
    while (i < e) {
      const std::size_t w = word_char_width(text, i);
      if (w == 0) {
        std::size_t next = i;
        next_code_point(text, next);
        i = next;
        continue;
      }
      const std::size_t tb = i;
      i += w;
      while (i < e) {
        const std::size_t more = word_char_width(text, i);
        if (more == 0) break;
        i += more;
      }
      s.tokens.push_back({std::string(text.substr(tb, i - tb)), tb, i});
    }
    raw.push_back(std::move(s));
  }

  // Token-less fragments fold into a neighbour so every sentence has tokens.
  for (auto& s : raw) {
    if (s.tokens.empty()) {
      if (!out.sentences.empty()) out.sentences.back().end = s.end;
      continue;
    }
    if (out.sentences.empty() && !raw.empty() && raw.front().begin < s.begin) s.begin = raw.front().begin;
    out.sentences.push_back(std::move(s));
  }
  if (out.sentences.empty() && !raw.empty()) {
    Sentence degenerate;
    degenerate.begin = raw.front().begin;
    degenerate.end = raw.back().end;
    out.sentences.push_back(std::move(degenerate));
  }
  for (std::size_t i = 0; i < out.sentences.size(); ++i) out.sentences[i].index = i;
  return out;
}

TokenizedEssay tokenize(const Essay& essay) { return tokenize_text(essay.text, essay.id); }

// ---------------------------------------------------------------------------
// Snapshots

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::vector<Json> lines;
  lines.reserve(corpus.size());
  for (const auto& e : corpus.essays()) lines.push_back(essay_to_json(e));
  write_json_lines(lines, path);
}

Corpus read_jsonl(const std::filesystem::path& path, const std::map<int, ScoreScale>& scales) {
  Corpus corpus(scales);
  for (const auto& j : read_json_lines(path)) corpus.add(essay_from_json(j));
  return corpus;
}

void write_scales(const std::map<int, ScoreScale>& scales, const std::filesystem::path& path) {
  Json j = Json::array();
  for (const auto& [prompt, s] : scales) {
    j.push_back({{"prompt_id", s.prompt_id}, {"min_score", s.min_score}, {"max_score", s.max_score}});
  }
  write_json_file(j, path);
}

std::map<int, ScoreScale> read_scales(const std::filesystem::path& path) {
  std::map<int, ScoreScale> out;
  for (const auto& s : read_json_file(path)) {
    ScoreScale scale{s.at("prompt_id").get<int>(), s.at("min_score").get<int>(), s.at("max_score").get<int>()};
    scale.validate();
    out[scale.prompt_id] = scale;
  }
  return out;
}

}  // namespace aesadv

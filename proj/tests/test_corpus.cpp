#include <filesystem>
#include <fstream>

#include "aesadv/corpus.hpp"
#include "aesadv/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aesadv;

namespace {

const char* kHeader = "essay_id\tessay_set\tessay\trater1_domain1\trater2_domain1\tdomain1_score\n";

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("aesadv_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("ingest: well-formed rows") {
  const std::string tsv = std::string(kHeader) +
                          "1\t1\tFirst essay. It is short.\t2\t3\t5\n"
                          "2\t1\tSecond one.\t1\t1\t2\n"
                          "3\t2\tOther prompt.\t0\t0\t0\n"
                          "4\t2\tAnother.\t1\t1\t3\n";
  const auto r = ingest_tsv_text(tsv);
  CHECK(r.errors.empty());
  CHECK(r.corpus.size() == 4);
  CHECK(r.corpus.scale(1) == ScoreScale{1, 2, 5});
  CHECK(r.corpus.scale(2) == ScoreScale{2, 0, 3});
  const auto* e = r.corpus.find("1");
  REQUIRE(e != nullptr);
  CHECK(e->rater_scores == std::vector<int>{2, 3});
  CHECK(e->gold_score == 5);
  CHECK(!e->is_adversarial());
}

TEST_CASE("ingest: malformed rows are skipped with their line numbers") {
  const std::string tsv = std::string(kHeader) +
                          "1\t1\tGood.\t1\t1\t1\n"
                          "2\tx\tBad set.\t1\t1\t1\n"
                          "3\t1\tBad score.\t1\t1\tfoo\n"
                          "4\t1\n"
                          "5\t1\t   \t1\t1\t2\n"
                          "6\t1\tGood too.\t2\t2\t2\n";
  const auto r = ingest_tsv_text(tsv);
  REQUIRE(r.errors.size() == 4);
  CHECK(r.errors[0].line == 3);
  CHECK(r.errors[1].line == 4);
  CHECK(r.errors[2].line == 5);
  CHECK(r.errors[3].line == 6);
  CHECK(r.corpus.size() == 2);
}

TEST_CASE("ingest: missing columns and empty input") {
  CHECK_THROWS_AS(ingest_tsv_text("essay_id\tessay_set\tessay\n1\t1\tx\n"), DataError);
  CHECK_THROWS_AS(ingest_tsv_text(""), DataError);
  CHECK_THROWS_AS(ingest_tsv(std::filesystem::path("/nonexistent/file.tsv")), DataError);
}

TEST_CASE("ingest: single observed score needs an override") {
  const std::string tsv = std::string(kHeader) + "1\t1\tA.\t1\t1\t2\n2\t1\tB.\t1\t1\t2\n";
  CHECK_THROWS_AS(ingest_tsv_text(tsv), DataError);
  IngestOptions opts;
  opts.scale_overrides[1] = ScoreScale{1, 1, 4};
  const auto r = ingest_tsv_text(tsv, opts);
  CHECK(r.corpus.scale(1) == ScoreScale{1, 1, 4});
}

TEST_CASE("ingest: prompt filter and duplicate ids") {
  const std::string tsv = std::string(kHeader) +
                          "1\t1\tA.\t1\t1\t1\n"
                          "1\t1\tDup.\t1\t1\t2\n"
                          "2\t1\tB.\t1\t1\t3\n"
                          "9\t7\tElsewhere.\t1\t1\t3\n";
  IngestOptions opts;
  opts.prompt_filter = std::set<int>{1};
  const auto r = ingest_tsv_text(tsv, opts);
  CHECK(r.corpus.size() == 2);
  CHECK(r.corpus.prompts() == std::vector<int>{1});
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].message.find("duplicate") != std::string::npos);
}

TEST_CASE("decode: CP1252 punctuation maps to UTF-8") {
  const std::string raw = "don\x92t \x93quoted\x94 caf\xe9";
  CHECK(decode_text(raw, TextEncoding::kCp1252) == "don\xe2\x80\x99t \xe2\x80\x9cquoted\xe2\x80\x9d caf\xc3\xa9");
  // Undefined CP1252 byte and invalid UTF-8 both become U+FFFD.
  CHECK(decode_text("\x81", TextEncoding::kCp1252) == "\xef\xbf\xbd");
  CHECK(decode_text("ok\xff", TextEncoding::kUtf8) == "ok\xef\xbf\xbd");
  CHECK(decode_text("caf\xc3\xa9", TextEncoding::kUtf8) == "caf\xc3\xa9");
}

TEST_CASE("tokenize: sentences and byte offsets") {
  const std::string text = "I like dogs. Do you? Yes!  They're fine";
  const auto t = tokenize_text(text);
  REQUIRE(t.sentences.size() == 4);
  CHECK(t.sentences[0].words() == std::vector<std::string>{"I", "like", "dogs"});
  CHECK(t.sentences[1].words() == std::vector<std::string>{"Do", "you"});
  CHECK(t.sentences[3].words() == std::vector<std::string>{"They're", "fine"});
  CHECK(t.token_count() == 8);
  for (const auto& s : t.sentences) {
    for (const auto& tok : s.tokens) CHECK(text.substr(tok.begin, tok.end - tok.begin) == tok.text);
  }
}

TEST_CASE("tokenize: offsets hold on random text") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto text = testing::random_text(rng, 1 + rng.below(6));
    const auto t = tokenize_text(text);
    std::size_t last = 0;
    for (const auto& s : t.sentences) {
      CHECK(s.begin >= last);
      for (const auto& tok : s.tokens) {
        CHECK(tok.begin >= s.begin);
        CHECK(tok.end <= s.end);
        CHECK(text.substr(tok.begin, tok.end - tok.begin) == tok.text);
      }
      last = s.end;
    }
  }
}

TEST_CASE("corpus: validation on add") {
  Corpus c({{1, ScoreScale{1, 1, 4}}});
  c.add(testing::make_essay("a", 1, 2));
  CHECK_THROWS_AS(c.add(testing::make_essay("a", 1, 2)), DataError);
  CHECK_THROWS_AS(c.add(testing::make_essay("b", 1, 9)), DataError);
  CHECK_THROWS_AS(c.add(testing::make_essay("c", 3, 2)), DataError);
  CHECK_THROWS_AS(c.add(testing::make_essay("d", 1, 2, "   ")), DataError);
  auto adv = testing::make_essay("e", 1, 2);
  adv.provenance = Provenance::kAdversarial;
  CHECK_THROWS_AS(c.add(adv), DataError);
  adv.source_id = "missing";
  c.add(adv);
  CHECK_THROWS_AS(c.validate_sources(), InvariantViolation);
  CHECK_THROWS_AS(ScoreScale({1, 3, 3}).validate(), ConfigError);
}

TEST_CASE("split: sizes and disjointness") {
  const auto c = testing::class_corpus({15, 35, 35, 15});
  SplitSpec spec;
  spec.seed = 5;
  const auto s = split(c, spec);
  CHECK(s.val.size() == 20);
  CHECK(s.test.size() == 20);
  CHECK(s.train.size() == 60);
  std::set<std::string> seen;
  for (const Corpus* part : {&s.train, &s.val, &s.test})
    for (const auto& e : part->essays()) CHECK(seen.insert(e.id).second);
  CHECK(seen.size() == 100);
}

TEST_CASE("split: stratified class counts stay within one of their share (property)") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = testing::rand_int(rng, 2, 6);
    std::vector<std::size_t> counts(k);
    for (auto& n : counts) n = static_cast<std::size_t>(testing::rand_int(rng, 1, 40));
    const auto c = testing::class_corpus(counts);
    SplitSpec spec;
    spec.seed = rng.next_u64();
    const double fracs[3][3] = {{0.6, 0.2, 0.2}, {0.5, 0.25, 0.25}, {0.7, 0.1, 0.2}};
    const auto& f = fracs[trial % 3];
    spec.train_fraction = f[0];
    spec.val_fraction = f[1];
    spec.test_fraction = f[2];
    Split s;
    try {
      s = split(c, spec);
    } catch (const DataError&) {
      continue;
    }
    const double n = static_cast<double>(c.size());
    CHECK(s.val.size() == static_cast<std::size_t>(std::floor(n * f[1] + 1e-9)));
    CHECK(s.test.size() == static_cast<std::size_t>(std::floor(n * f[2] + 1e-9)));
    CHECK(s.train.size() + s.val.size() + s.test.size() == c.size());
    const auto total = c.class_counts();
    const Corpus* parts[3] = {&s.train, &s.val, &s.test};
    for (int p = 0; p < 3; ++p) {
      const auto got = parts[p]->class_counts();
      const double share = static_cast<double>(parts[p]->size()) / n;
      for (const auto& [y, cnt] : total) {
        const double target = share * static_cast<double>(cnt);
        const double actual = got.count(y) ? static_cast<double>(got.at(y)) : 0.0;
        CHECK(std::abs(actual - target) < 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("split: deterministic under a seed") {
  const auto c = testing::class_corpus({10, 20, 10});
  SplitSpec spec;
  spec.seed = 77;
  CHECK(split(c, spec).test.ids() == split(c, spec).test.ids());
  spec.seed = 78;
  CHECK(split(c, spec).test.ids() != split(testing::class_corpus({10, 20, 10}), SplitSpec{0.6, 0.2, 0.2, 77, true}).test.ids());
}

TEST_CASE("split: fraction validation") {
  CHECK_THROWS_AS((SplitSpec{0.5, 0.2, 0.2, 0, true}).validate(), ConfigError);
  CHECK_THROWS_AS((SplitSpec{1.0, 0.0, 0.0, 0, true}).validate(), ConfigError);
  CHECK_THROWS_AS(split(Corpus({{1, ScoreScale{1, 1, 4}}}), SplitSpec{}), DataError);
}

TEST_CASE("split with a fixed test set") {
  const auto c = testing::class_corpus({10, 10, 10, 10});
  std::set<std::string> test = {"e0", "e1", "e2", "e3", "e4"};
  const auto s = split_with_fixed_test(c, test, SplitSpec{0.6, 0.2, 0.2, 1, true});
  CHECK(s.test.size() == 5);
  for (const auto& id : test) {
    CHECK(s.test.contains(id));
    CHECK(!s.train.contains(id));
    CHECK(!s.val.contains(id));
  }
  CHECK(s.train.size() + s.val.size() == 35);
}

TEST_CASE("jsonl round trip preserves every field") {
  const auto dir = temp_dir("jsonl");
  Corpus c({{2, ScoreScale{2, 0, 3}}});
  auto e = testing::make_essay("x1", 2, 3, "Caf\xc3\xa9 \"quoted\"\ttab.");
  e.rater_scores = {1, 2};
  c.add(e);
  auto adv = testing::make_essay("x1#adv0", 2, 3);
  adv.provenance = Provenance::kAdversarial;
  adv.source_id = "x1";
  c.add(adv);
  write_jsonl(c, dir / "c.jsonl");
  write_scales(c.scales(), dir / "s.json");
  const auto scales = read_scales(dir / "s.json");
  CHECK(scales == c.scales());
  const auto back = read_jsonl(dir / "c.jsonl", scales);
  REQUIRE(back.size() == 2);
  CHECK(back.essays()[0].text == e.text);
  CHECK(back.essays()[0].rater_scores == e.rater_scores);
  CHECK(back.essays()[1].is_adversarial());
  CHECK(back.essays()[1].source_id == "x1");
  std::filesystem::remove_all(dir);
}

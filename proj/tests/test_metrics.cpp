#include <chrono>

#include "aesadv/error.hpp"
#include "aesadv/log.hpp"
#include "aesadv/metrics.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aesadv;

TEST_CASE("qwk: perfect agreement is 1") {
  const std::vector<int> r = {1, 2, 3, 4};
  CHECK(qwk(r, r, {1, 1, 4}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("qwk: one disagreement matches the direct formula") {
  const std::vector<int> ref = {1, 2, 3, 4};
  const std::vector<int> pred = {1, 2, 3, 3};
  const double expected = testing::qwk_direct(ref, pred, 1, 4);
  CHECK(std::abs(qwk(ref, pred, {1, 1, 4}) - expected) < 1e-12);
  // Hand computation: O has 1/4 on (0,0),(1,1),(2,2),(3,2). Row marginal 1/4
  // each, column marginal (1/4,1/4,1/2,0). sum w*O = (1/9)/4 = 1/36;
  // sum w*E = (1/16)*[row0: 0+1/9+4/9*2 ... ] computed below.
  double we = 0;
  const double row[4] = {.25, .25, .25, .25};
  const double col[4] = {.25, .25, .5, 0};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) we += (i - j) * (i - j) / 9.0 * row[i] * col[j];
  CHECK(qwk(ref, pred, {1, 1, 4}) == doctest::Approx(1.0 - (1.0 / 36.0) / we).epsilon(1e-12));
}

TEST_CASE("qwk: two-point reversal is -1") {
  const std::vector<int> ref = {0, 1};
  const std::vector<int> pred = {1, 0};
  CHECK(qwk(ref, pred, {1, 0, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("qwk: constant agreement on one value returns 1") {
  log::set_level(log::Level::kQuiet);
  const std::vector<int> r = {2, 2, 2};
  CHECK(qwk(r, r, {1, 1, 4}) == 1.0);
  log::set_level(log::Level::kWarn);
}

TEST_CASE("qwk: constant prediction against varied reference is 0") {
  const std::vector<int> ref = {1, 2, 3, 4, 2};
  const std::vector<int> pred = {3, 3, 3, 3, 3};
  CHECK(qwk(ref, pred, {1, 1, 4}) == doctest::Approx(testing::qwk_direct(ref, pred, 1, 4)).epsilon(1e-12));
  CHECK(std::abs(qwk(ref, pred, {1, 1, 4})) < 1e-12);
}

TEST_CASE("qwk: errors") {
  const std::vector<int> empty;
  CHECK_THROWS_AS(qwk(empty, empty, {1, 1, 4}), DataError);
  const std::vector<int> a = {1, 5};
  CHECK_THROWS_AS(qwk(a, a, {1, 1, 4}), DataError);
  std::vector<RatingPair> mixed = {{1, 1, {1, 1, 4}}, {2, 2, {1, 0, 4}}};
  CHECK_THROWS_AS(qwk(mixed), DataError);
  std::vector<RatingPair> same = {{1, 1, {1, 1, 4}}, {2, 3, {1, 1, 4}}};
  const std::vector<int> r = {1, 2}, p = {1, 3};
  CHECK(qwk(same) == qwk(r, p, {1, 1, 4}));
}

TEST_CASE("qwk properties over random rating sets") {
  Rng rng(42);
  log::set_level(log::Level::kQuiet);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = testing::rand_int(rng, 2, 7);
    const int lo = testing::rand_int(rng, -3, 3);
    const int n = testing::rand_int(rng, 1, 50);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = testing::rand_int(rng, lo, lo + k - 1);
      b[i] = testing::rand_int(rng, lo, lo + k - 1);
    }
    const ScoreScale s{1, lo, lo + k - 1};
    const double kab = qwk(a, b, s);
    CHECK(kab == doctest::Approx(qwk(b, a, s)).epsilon(1e-12));
    CHECK(kab <= 1.0 + 1e-12);
    CHECK(kab >= -1.0 - 1e-12);
    CHECK(std::abs(kab - testing::qwk_direct(a, b, lo, lo + k - 1)) < 1e-12);
    // Label shift invariance.
    std::vector<int> a2 = a, b2 = b;
    for (auto& x : a2) x += 10;
    for (auto& x : b2) x += 10;
    CHECK(qwk(a2, b2, {1, lo + 10, lo + k + 9}) == doctest::Approx(kab).epsilon(1e-12));
  }
  log::set_level(log::Level::kWarn);
}

TEST_CASE("confusion matrix spans the full scale") {
  const std::vector<int> ref = {1, 1, 2};
  const std::vector<int> pred = {1, 2, 2};
  const auto e = evaluate_predictions(ref, pred, {1, 1, 4});
  CHECK(e.confusion.counts.size() == 16);
  CHECK(e.confusion.at(1, 1) == 1);
  CHECK(e.confusion.at(1, 2) == 1);
  CHECK(e.confusion.at(2, 2) == 1);
  CHECK(e.confusion.at(4, 4) == 0);
  CHECK(e.count == 3);
}

TEST_CASE("perfect predictions give a diagonal confusion matrix") {
  const std::vector<int> ref = {1, 2, 3, 4, 4, 2};
  const auto e = evaluate_predictions(ref, ref, {1, 1, 4});
  CHECK(e.kappa == doctest::Approx(1.0));
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j)
      if (i != j) CHECK(e.confusion.at(i, j) == 0);
}

namespace {

QwkReport table2_fixture() {
  QwkCell c;
  c.generation_ratio = 0.30;
  c.attack_size_ratio = 0.50;
  c.prompt_id = 2;
  c.no_attack = ConditionResult{0.695, 100};
  c.with_attack = ConditionResult{0.590, 150};
  c.with_augmentation = ConditionResult{0.764, 150};
  return QwkReport{{c}, {}};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto nl = s.find('\n', start);
    out.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("report: published prompt-2 fixture renders the published deltas") {
  const auto report = table2_fixture();
  const auto text = render_text(report);
  CHECK(text.find("0.695") != std::string::npos);
  CHECK(text.find("0.590") != std::string::npos);
  CHECK(text.find("0.764") != std::string::npos);
  CHECK(text.find("-0.105") != std::string::npos);
  CHECK(text.find("+0.174") != std::string::npos);
  CHECK(text.find("No Attack") != std::string::npos);
  CHECK(text.find("With Attack") != std::string::npos);
  CHECK(text.find("With Augmentation") != std::string::npos);
  // Header, rule, one row.
  CHECK(lines(text).size() == 3);
}

TEST_CASE("report: CSV twin carries the same numbers") {
  const auto report = table2_fixture();
  const auto csv = lines(render_csv(report));
  REQUIRE(csv.size() == 2);
  CHECK(csv[1] == "0.30,0.50,2,0.695,0.590,0.764,-0.105,+0.174");
  const auto text = render_text(report);
  for (const char* v : {"0.695", "0.590", "0.764", "-0.105", "+0.174"}) {
    CHECK(text.find(v) != std::string::npos);
    CHECK(csv[1].find(v) != std::string::npos);
  }
}

TEST_CASE("report: missing conditions stay blank") {
  QwkCell c;
  c.generation_ratio = 0.4;
  c.attack_size_ratio = 0.75;
  c.prompt_id = 1;
  c.no_attack = ConditionResult{0.7, 10};
  const QwkReport r{{c}, {"generation_ratio=0.40 attack_size=0.75 prompt=1: boom"}};
  const auto csv = lines(render_csv(r));
  CHECK(csv[1] == "0.40,0.75,1,0.700,,,,");
  const auto text = render_text(r);
  CHECK(text.find("boom") != std::string::npos);
  CHECK(!c.attack_delta().has_value());
  CHECK_THROWS_AS(render_text(QwkReport{}), ConfigError);
}

TEST_CASE("report: JSON round trip") {
  const auto r = table2_fixture();
  const auto back = report_from_json(report_to_json(r));
  REQUIRE(back.cells.size() == 1);
  CHECK(back.cells[0].with_attack->kappa == 0.590);
  CHECK(back.cells[0].with_augmentation->count == 150);
  CHECK(render_csv(back) == render_csv(r));
}

TEST_CASE("delta formatting never prints negative zero") {
  CHECK(format_delta(-0.0001) == "+0.000");
  CHECK(format_delta(0.1744) == "+0.174");
  CHECK(format_kappa(-0.0002) == "0.000");
}

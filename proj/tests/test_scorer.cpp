#include <cmath>
#include <limits>

#include "aesadv/error.hpp"
#include "aesadv/scorer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aesadv;

namespace {

// Recomputes the network output from scratch with explicit loops.
double reference_forward(const ScorerParams& p, const std::vector<double>& x) {
  const std::size_t in = p.inputs(), h = p.hidden();
  const auto v = p.values();
  double out = v[h * (in + 2)];
  for (std::size_t j = 0; j < h; ++j) {
    double a = v[h * in + j];
    for (std::size_t i = 0; i < in; ++i) a += v[j * in + i] * x[i];
    out += v[h * (in + 1) + j] * std::tanh(a);
  }
  return out;
}

double reference_loss(const ScorerParams& p, const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t in = p.inputs();
  double s = 0;
  for (std::size_t r = 0; r < ys.size(); ++r) {
    const std::vector<double> x(xs.begin() + static_cast<std::ptrdiff_t>(r * in),
                                xs.begin() + static_cast<std::ptrdiff_t>((r + 1) * in));
    const double d = reference_forward(p, x) - ys[r];
    s += d * d;
  }
  return s / static_cast<double>(ys.size());
}

ScorerParams random_params(Rng& rng, std::size_t in, std::size_t h) {
  ScorerParams p(in, h);
  for (auto& v : p.values()) v = rng.uniform() * 2.0 - 1.0;
  return p;
}

}  // namespace

TEST_CASE("rmsprop single step matches the closed form") {
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g = {0.3, -0.1, 0.0};
  std::vector<double> s = {0.04, 0.0, 1.0};
  const RmsPropConfig cfg{0.01, 0.9, 1e-8};
  rmsprop_step(p, g, s, cfg);
  const double s0 = 0.9 * 0.04 + 0.1 * 0.09;
  const double s1 = 0.1 * 0.01;
  const double s2 = 0.9;
  CHECK(std::abs(s[0] - s0) < 1e-15);
  CHECK(std::abs(s[1] - s1) < 1e-15);
  CHECK(std::abs(s[2] - s2) < 1e-15);
  CHECK(std::abs(p[0] - (1.0 - 0.01 * 0.3 / std::sqrt(s0 + 1e-8))) < 1e-10);
  CHECK(std::abs(p[1] - (-2.0 + 0.01 * 0.1 / std::sqrt(s1 + 1e-8))) < 1e-10);
  CHECK(p[2] == 0.5);
  std::vector<double> short_state(2);
  CHECK_THROWS_AS(rmsprop_step(p, g, short_state, cfg), InvariantViolation);
}

TEST_CASE("forward and loss agree with a direct recomputation") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t in = 1 + rng.below(6), h = 1 + rng.below(5), rows = 1 + rng.below(8);
    const auto p = random_params(rng, in, h);
    std::vector<double> xs(rows * in), ys(rows);
    for (auto& x : xs) x = rng.normal();
    for (auto& y : ys) y = rng.uniform();
    std::vector<double> grad(p.values().size());
    CHECK(loss_and_gradient(p, xs, ys, grad) == doctest::Approx(reference_loss(p, xs, ys)).epsilon(1e-12));
    const std::vector<double> x0(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(in));
    CHECK(forward(p, x0) == doctest::Approx(reference_forward(p, x0)).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central differences on every layer") {
  Rng rng(2);
  const std::size_t in = 6, h = 5, rows = 7;
  auto p = random_params(rng, in, h);
  std::vector<double> xs(rows * in), ys(rows);
  for (auto& x : xs) x = rng.normal();
  for (auto& y : ys) y = rng.uniform();
  std::vector<double> grad(p.values().size());
  loss_and_gradient(p, xs, ys, grad);

  const std::size_t w1_end = h * in, b1_end = w1_end + h, w2_end = b1_end + h;
  const std::pair<std::size_t, std::size_t> layers[] = {{0, w1_end}, {w1_end, b1_end}, {b1_end, w2_end},
                                                        {w2_end, w2_end + 1}};
  for (const auto& [lo, hi] : layers) {
    const std::size_t picks = std::min<std::size_t>(5, hi - lo);
    for (std::size_t k = 0; k < picks; ++k) {
      const std::size_t idx = lo + (picks == hi - lo ? k : rng.below(hi - lo));
      const double eps = 1e-5, orig = p.values()[idx];
      p.values()[idx] = orig + eps;
      const double up = reference_loss(p, xs, ys);
      p.values()[idx] = orig - eps;
      const double down = reference_loss(p, xs, ys);
      p.values()[idx] = orig;
      const double numeric = (up - down) / (2 * eps);
      CHECK(testing::relative_close(grad[idx], numeric, 1e-4));
    }
  }
}

TEST_CASE("init params: Glorot bounds and zero biases") {
  const auto p = init_params(10, 6, 3);
  const double w1_bound = std::sqrt(6.0 / 16.0);
  for (double w : p.w1()) CHECK(std::abs(w) <= w1_bound);
  for (double b : p.b1()) CHECK(b == 0.0);
  const double w2_bound = std::sqrt(6.0 / 7.0);
  for (double w : p.w2()) CHECK(std::abs(w) <= w2_bound);
  CHECK(p.b2() == 0.0);
  CHECK(init_params(10, 6, 3).values()[5] == p.values()[5]);
}

TEST_CASE("toy training reaches QWK 0.9 on linearly separable labels") {
  // Score = 1 + number of positive coordinates among the first three.
  Rng rng(5);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 10; ++i) {
    FeatureVector x(4);
    for (auto& v : x) v = rng.normal();
    int s = 1;
    for (int k = 0; k < 3; ++k) s += x[static_cast<std::size_t>(k)] > 0;
    xs.push_back(x);
    ys.push_back(s);
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 200;
  cfg.hidden = 8;
  const auto r = train_on_features(xs, ys, xs, ys, ScoreScale{1, 1, 4}, cfg);
  REQUIRE(r.history.size() == 200);
  double best = -2.0;
  for (const auto& e : r.history) best = std::max(best, e.val_qwk);
  CHECK(best >= 0.9);
  CHECK(r.history[static_cast<std::size_t>(r.best_epoch) - 1].val_qwk == best);
  for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(r.best_epoch); ++i) CHECK(r.history[i].val_qwk < best);
  int correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) correct += r.model.predict(xs[i]) == ys[i];
  CHECK(correct >= 7);
}

TEST_CASE("mini-batch training is deterministic in the seed") {
  Rng rng(6);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 30; ++i) {
    FeatureVector x = {rng.normal(), rng.normal()};
    xs.push_back(x);
    ys.push_back(x[0] > 0 ? 2 : 1);
  }
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 9;
  const auto a = train_on_features(xs, ys, xs, ys, ScoreScale{1, 1, 2}, cfg);
  const auto b = train_on_features(xs, ys, xs, ys, ScoreScale{1, 1, 2}, cfg);
  CHECK(std::vector<double>(a.model.params.values().begin(), a.model.params.values().end()) ==
        std::vector<double>(b.model.params.values().begin(), b.model.params.values().end()));
}

TEST_CASE("non-finite gradients abort training") {
  std::vector<FeatureVector> xs = {{1.0, 0.0}, {0.0, 1.0}, {std::numeric_limits<double>::quiet_NaN(), 1.0}};
  std::vector<int> ys = {1, 2, 2};
  TrainConfig cfg;
  cfg.epochs = 3;
  CHECK_THROWS_AS(train_on_features(xs, ys, xs, ys, ScoreScale{1, 1, 2}, cfg), TrainingError);
}

TEST_CASE("score_from_raw clamps and rounds") {
  ScorerModel m;
  m.scale = ScoreScale{1, 1, 4};
  CHECK(m.score_from_raw(0.0) == 1);
  CHECK(m.score_from_raw(1.0) == 4);
  CHECK(m.score_from_raw(0.5) == 3);  // 2.5 rounds half up
  CHECK(m.score_from_raw(-9.0) == 1);
  CHECK(m.score_from_raw(9.0) == 4);
  m.feature_mean = {0.0};
  m.feature_scale = {1.0};
  CHECK_THROWS_AS(m.standardize({1.0, 2.0}), InvariantViolation);
}

TEST_CASE("featurize: embedding mean plus surface features") {
  const auto e = testing::make_essay("f", 1, 1, "A cat. A big cat sat.");
  const auto f = featurize(e, testing::FakeEmbedder{});
  REQUIRE(f.size() == 3 + kSurfaceFeatures);
  // Sentences "A cat." (6 chars, one 'a') and "A big cat sat." (14, two 'a').
  CHECK(f[0] == doctest::Approx(10.0));
  CHECK(f[1] == doctest::Approx(1.5));
  CHECK(f[2] == doctest::Approx(1.0));
  CHECK(f[3] == doctest::Approx(std::log(6.0)));
  CHECK(f[4] == doctest::Approx(std::log(2.0)));
  CHECK(f[5] == doctest::Approx(4.0 / 6.0));
  CHECK(f[6] == doctest::Approx(14.0 / 6.0));
}

TEST_CASE("checkpoint round trip and tamper detection") {
  Rng rng(7);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 12; ++i) {
    xs.push_back({rng.normal(), rng.normal(), rng.normal()});
    ys.push_back(1 + static_cast<int>(rng.below(3)));
  }
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto r = train_on_features(xs, ys, xs, ys, ScoreScale{1, 1, 3}, cfg);
  const auto j = checkpoint_to_json(r.model);
  const auto back = checkpoint_from_json(j);
  for (const auto& x : xs) CHECK(back.raw_output(x) == r.model.raw_output(x));
  CHECK(back.scale == r.model.scale);

  auto tampered = j;
  tampered["params"]["w2"][0] = tampered["params"]["w2"][0].get<double>() + 1e-6;
  CHECK_THROWS_AS(checkpoint_from_json(tampered), DataError);
  auto broken = j;
  broken.erase("params");
  CHECK_THROWS_AS(checkpoint_from_json(broken), DataError);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.decay = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("a single epoch returns the parameters after one full-batch step") {
  Rng rng(8);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 9; ++i) {
    xs.push_back({rng.normal(), 3.0 + rng.normal(), rng.uniform()});
    ys.push_back(1 + static_cast<int>(rng.below(4)));
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.hidden = 4;
  cfg.learning_rate = 0.05;
  const ScoreScale scale{1, 1, 4};
  const auto r = train_on_features(xs, ys, xs, ys, scale, cfg);
  REQUIRE(r.history.size() == 1);
  CHECK(r.best_epoch == 1);

  auto expected = init_params(3, 4, cfg.seed);
  std::vector<double> stacked, targets;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto z = r.model.standardize(xs[i]);
    stacked.insert(stacked.end(), z.begin(), z.end());
    targets.push_back((ys[i] - 1) / 3.0);
  }
  std::vector<double> grad(expected.values().size()), state(grad.size(), 0.0);
  loss_and_gradient(expected, stacked, targets, grad);
  rmsprop_step(expected.values(), grad, state, cfg.rmsprop());
  for (std::size_t k = 0; k < grad.size(); ++k) {
    CHECK(r.model.params.values()[k] == doctest::Approx(expected.values()[k]).epsilon(1e-12));
  }
}

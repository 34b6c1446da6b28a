#include "aesadv/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "aesadv/error.hpp"
#include "aesadv/kernels.hpp"
#include "aesadv/log.hpp"

namespace aesadv {

namespace {

void check_ratings(std::span<const int> reference, std::span<const int> predicted, const ScoreScale& scale) {
  if (reference.size() != predicted.size()) throw InvariantViolation("reference and prediction counts differ");
  if (reference.empty()) throw DataError("qwk of an empty rating set");
  scale.validate();
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!scale.contains(reference[i]) || !scale.contains(predicted[i])) {
      throw DataError("rating pair (" + std::to_string(reference[i]) + ", " + std::to_string(predicted[i]) +
                      ") outside scale " + std::to_string(scale.min_score) + ".." + std::to_string(scale.max_score));
    }
  }
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> reference, std::span<const int> predicted,
                                 const ScoreScale& scale) {
  check_ratings(reference, predicted, scale);
  ConfusionMatrix m;
  m.scale = scale;
  m.counts = kernels::confusion_serial(reference, predicted, scale.min_score,
                                       static_cast<std::size_t>(scale.num_classes()));
  return m;
}

double qwk(std::span<const int> reference, std::span<const int> predicted, const ScoreScale& scale) {
  const auto m = confusion_matrix(reference, predicted, scale);
  const std::size_t k = m.classes();
  const double n = static_cast<double>(reference.size());
  std::vector<double> rows(k, 0.0);
  std::vector<double> cols(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      rows[i] += static_cast<double>(m.counts[i * k + j]);
      cols[j] += static_cast<double>(m.counts[i * k + j]);
    }
  }
  const double norm = static_cast<double>((k - 1) * (k - 1));
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = d * d / norm;
      observed += w * static_cast<double>(m.counts[i * k + j]) / n;
      expected += w * (rows[i] / n) * (cols[j] / n);
    }
  }
  if (expected == 0.0) {
    log::warn("qwk: no expected disagreement (all ratings on one value); returning 1.0");
    return 1.0;
  }
  return 1.0 - observed / expected;
}

double qwk(std::span<const RatingPair> pairs) {
  if (pairs.empty()) throw DataError("qwk of an empty rating set");
  const ScoreScale scale = pairs.front().scale;
  std::vector<int> ref;
  std::vector<int> pred;
  for (const auto& p : pairs) {
    if (!(p.scale == scale)) throw DataError("qwk over rating pairs from different scales");
    ref.push_back(p.reference);
    pred.push_back(p.predicted);
  }
  return qwk(ref, pred, scale);
}

Evaluation evaluate_predictions(std::span<const int> reference, std::span<const int> predicted,
                                const ScoreScale& scale) {
  Evaluation e;
  e.confusion = confusion_matrix(reference, predicted, scale);
  e.kappa = qwk(reference, predicted, scale);
  e.count = reference.size();
  return e;
}

Evaluation evaluate(const ScorerModel& model, const Corpus& set, const EmbeddingBackend& embedder, bool parallel) {
  if (set.empty()) throw DataError("evaluation set is empty");
  for (const auto& e : set.essays()) {
    if (e.prompt_id != model.scale.prompt_id) {
      throw DataError("essay " + e.id + " belongs to prompt " + std::to_string(e.prompt_id) + ", model was trained on " +
                      std::to_string(model.scale.prompt_id));
    }
  }
  const auto predicted = predict_all(model, set, embedder, parallel);
  std::vector<int> gold;
  gold.reserve(set.size());
  for (const auto& e : set.essays()) gold.push_back(e.gold_score);
  return evaluate_predictions(gold, predicted, model.scale);
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::kNoAttack:
      return "no_attack";
    case Condition::kWithAttack:
      return "with_attack";
    case Condition::kWithAugmentation:
      return "with_augmentation";
  }
  return "unknown";
}

std::optional<ConditionResult>& QwkCell::operator[](Condition c) {
  switch (c) {
    case Condition::kNoAttack:
      return no_attack;
    case Condition::kWithAttack:
      return with_attack;
    default:
      return with_augmentation;
  }
}

const std::optional<ConditionResult>& QwkCell::operator[](Condition c) const {
  return const_cast<QwkCell&>(*this)[c];
}

std::optional<double> QwkCell::attack_delta() const {
  if (!no_attack || !with_attack) return std::nullopt;
  return with_attack->kappa - no_attack->kappa;
}

std::optional<double> QwkCell::augmentation_delta() const {
  if (!with_attack || !with_augmentation) return std::nullopt;
  return with_augmentation->kappa - with_attack->kappa;
}

namespace {

std::string fixed3(double v, bool sign) {
  char buf[32];
  std::snprintf(buf, sizeof buf, sign ? "%+.3f" : "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = sign ? "+0.000" : "0.000";
  return s;
}

std::string percent(double ratio) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0f%%", ratio * 100.0);
  return buf;
}

constexpr Condition kConditions[] = {Condition::kNoAttack, Condition::kWithAttack, Condition::kWithAugmentation};

std::vector<std::string> row_fields(const QwkCell& c) {
  std::vector<std::string> f = {percent(c.generation_ratio), percent(c.attack_size_ratio), std::to_string(c.prompt_id)};
  for (auto cond : kConditions) f.push_back(c[cond] ? format_kappa(c[cond]->kappa) : "");
  const auto da = c.attack_delta();
  const auto dg = c.augmentation_delta();
  f.push_back(da ? format_delta(*da) : "");
  f.push_back(dg ? format_delta(*dg) : "");
  return f;
}

const std::vector<std::string> kHeader = {"Gen Ratio",   "Attack Size",       "Prompt",          "No Attack",
                                          "With Attack", "With Augmentation", "Attack - None", "Aug - Attack"};
const std::vector<std::string> kCsvHeader = {"generation_ratio", "attack_size", "prompt",          "no_attack",
                                             "with_attack",      "with_augmentation", "delta_attack", "delta_augmentation"};

}  // namespace

std::string format_delta(double d) { return fixed3(d, true); }
std::string format_kappa(double k) { return fixed3(k, false); }

std::string render_text(const QwkReport& report) {
  if (report.cells.empty()) throw ConfigError("report has no cells");
  std::vector<std::vector<std::string>> rows = {kHeader};
  for (const auto& c : report.cells) rows.push_back(row_fields(c));
  std::vector<std::size_t> width(kHeader.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) line += "  ";
      // Text columns left-aligned, numbers right-aligned.
      const std::string pad(width[i] - r[i].size(), ' ');
      line += i < 3 ? r[i] + pad : pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  };
  emit(rows.front());
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
  if (!report.failures.empty()) {
    out << "\nfailed cells:\n";
    for (const auto& f : report.failures) out << "  " << f << '\n';
  }
  return out.str();
}

std::string render_csv(const QwkReport& report) {
  if (report.cells.empty()) throw ConfigError("report has no cells");
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  };
  emit(kCsvHeader);
  for (const auto& c : report.cells) {
    auto f = row_fields(c);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", c.generation_ratio);
    f[0] = buf;
    std::snprintf(buf, sizeof buf, "%.2f", c.attack_size_ratio);
    f[1] = buf;
    emit(f);
  }
  return out.str();
}

nlohmann::json report_to_json(const QwkReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json conds = nlohmann::json::object();
    for (auto cond : kConditions) {
      if (c[cond]) conds[to_string(cond)] = {{"kappa", c[cond]->kappa}, {"count", c[cond]->count}};
    }
    nlohmann::json jc = {{"generation_ratio", c.generation_ratio},
                         {"attack_size_ratio", c.attack_size_ratio},
                         {"prompt_id", c.prompt_id},
                         {"conditions", conds}};
    if (auto d = c.attack_delta()) jc["delta_attack"] = *d;
    if (auto d = c.augmentation_delta()) jc["delta_augmentation"] = *d;
    cells.push_back(std::move(jc));
  }
  return {{"metric", "quadratic_weighted_kappa"}, {"cells", cells}, {"failures", report.failures}};
}

QwkReport report_from_json(const nlohmann::json& j) {
  try {
    QwkReport r;
    for (const auto& jc : j.at("cells")) {
      QwkCell c;
      c.generation_ratio = jc.at("generation_ratio").get<double>();
      c.attack_size_ratio = jc.at("attack_size_ratio").get<double>();
      c.prompt_id = jc.at("prompt_id").get<int>();
      const auto& conds = jc.at("conditions");
      for (auto cond : kConditions) {
        const auto key = to_string(cond);
        if (conds.contains(key)) {
          c[cond] = ConditionResult{conds[key].at("kappa").get<double>(), conds[key].at("count").get<std::size_t>()};
        }
      }
      r.cells.push_back(c);
    }
    if (j.contains("failures")) r.failures = j.at("failures").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed report: ") + ex.what());
  }
}

}  // namespace aesadv

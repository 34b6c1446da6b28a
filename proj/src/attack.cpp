#include "aesadv/attack.hpp"

#include <algorithm>

#include "aesadv/checksum.hpp"
#include "aesadv/error.hpp"
#include "aesadv/json_io.hpp"
#include "aesadv/kernels.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

void AttackSpec::validate() const {
  if (!(generation_ratio > 0.0) || generation_ratio >= 1.0) throw ConfigError("generation_ratio must be in (0, 1)");
  if (!(attack_size_ratio > 0.0)) throw ConfigError("attack_size_ratio must be > 0");
}

PipelineGenerator::PipelineGenerator(GenerationSpec spec, Backends backends, std::map<int, ScoreScale> scales)
    : spec_(spec), backends_(std::move(backends)), scales_(std::move(scales)) {
  spec_.validate();
  if (!backends_.embedder || !backends_.infiller || !backends_.cmlm) throw ConfigError("incomplete backend set");
}

PerturbedEssay PipelineGenerator::generate(const Essay& source, const std::string& adversarial_id, std::uint64_t seed,
                                           double generation_ratio) const {
  auto it = scales_.find(source.prompt_id);
  if (it == scales_.end()) throw DataError("no score scale for prompt " + std::to_string(source.prompt_id));
  GenerationSpec spec = spec_;
  spec.generation_ratio = generation_ratio;
  spec.seed = seed;
  const auto tokens = tokenize(source);
  const std::size_t k = default_sentence_count(tokens.sentences.size(), spec.sentence_ratio);
  const auto selection = select_sentences(source, tokens, *backends_.embedder, k, seed);
  return perturb_essay(source, tokens, selection, spec, it->second, backends_, adversarial_id);
}

std::map<int, double> sampling_weights(const Corpus& base, bool imbalance_aware) {
  if (base.empty()) throw DataError("sampling weights of an empty corpus");
  const auto counts = base.class_counts();
  std::map<int, double> weights;
  double total = 0.0;
  for (const auto& [y, c] : counts) {
    const double w = imbalance_aware ? 1.0 / static_cast<double>(c) : static_cast<double>(c);
    weights[y] = w;
    total += w;
  }
  for (auto& [y, w] : weights) w /= total;
  return weights;
}

std::size_t adversarial_target(std::size_t base_size, double attack_size_ratio) {
  return static_cast<std::size_t>(round_half_up(attack_size_ratio * static_cast<double>(base_size)));
}

std::vector<SourceDraw> draw_sources(const Corpus& base, std::size_t count, bool imbalance_aware, std::uint64_t seed) {
  if (base.empty()) throw DataError("cannot draw sources from an empty corpus");
  Rng rng(seed);
  std::vector<SourceDraw> draws;
  draws.reserve(count);

  auto take = [&](std::vector<std::size_t>& pool, const std::vector<std::size_t>& full) {
    if (pool.empty()) pool = full;
    const auto at = static_cast<std::size_t>(rng.below(pool.size()));
    const std::size_t chosen = pool[at];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
    return chosen;
  };

  if (!imbalance_aware) {
    std::vector<std::size_t> full(base.size());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = i;
    std::vector<std::size_t> pool = full;
    for (std::size_t d = 0; d < count; ++d) draws.push_back({d, base.essays()[take(pool, full)].id});
    return draws;
  }

  const auto weights = sampling_weights(base, true);
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < base.size(); ++i) members[base.essays()[i].gold_score].push_back(i);
  std::map<int, std::vector<std::size_t>> pools = members;
  for (std::size_t d = 0; d < count; ++d) {
    const double u = rng.uniform();
    double acc = 0.0;
    int label = weights.rbegin()->first;
    for (const auto& [y, w] : weights) {
      acc += w;
      if (u < acc) {
        label = y;
        break;
      }
    }
    draws.push_back({d, base.essays()[take(pools[label], members[label])].id});
  }
  return draws;
}

namespace {

struct Generated {
  std::vector<PerturbedEssay> adversarial;
  std::vector<Exclusion> exclusions;
  std::size_t target = 0;
};

Generated generate_from(const Corpus& base, const AttackSpec& spec, const AdversarialGenerator& generator,
                        bool parallel) {
  spec.validate();
  if (base.empty()) throw DataError("attack base set is empty");
  Generated out;
  out.target = adversarial_target(base.size(), spec.attack_size_ratio);
  const auto draws = draw_sources(base, out.target, spec.imbalance_aware, spec.seed);
  std::vector<PerturbedEssay> produced(draws.size());
  kernels::for_each_index(parallel, draws.size(), [&](std::size_t i) {
    const auto& d = draws[i];
    const Essay* src = base.find(d.source_id);
    produced[i] = generator.generate(*src, d.source_id + "#adv" + std::to_string(d.draw_index),
                                     mix_seed(spec.seed, d.draw_index), spec.generation_ratio);
  });
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (produced[i].report.degenerate) {
      out.exclusions.push_back({draws[i].draw_index, draws[i].source_id, "degenerate: no sentence perturbed"});
    } else {
      out.adversarial.push_back(std::move(produced[i]));
    }
  }
  return out;
}

}  // namespace

Corpus AttackSet::records(const Corpus& originals) const {
  Corpus out(originals.scales());
  for (const auto& id : base) {
    const Essay* e = originals.find(id);
    if (e == nullptr) throw InvariantViolation("attack base essay " + id + " missing from originals");
    out.add(*e);
  }
  for (const auto& a : adversarial) out.add(a.essay);
  return out;
}

AttackSet build_attack_set(const Corpus& test, const AttackSpec& spec, const AdversarialGenerator& generator,
                           bool parallel) {
  auto gen = generate_from(test, spec, generator, parallel);
  AttackSet set;
  set.spec = spec;
  set.base = test.ids();
  set.adversarial = std::move(gen.adversarial);
  set.exclusions = std::move(gen.exclusions);
  set.target = gen.target;
  for (const auto& a : set.adversarial) {
    if (!test.contains(a.essay.source_id)) {
      throw InvariantViolation("attack essay " + a.essay.id + " sourced outside the base set");
    }
  }
  return set;
}

void check_no_leakage(const std::vector<PerturbedEssay>& adversarial, const Corpus& allowed_sources,
                      const std::set<std::string>& holdout_ids) {
  for (const auto& a : adversarial) {
    const auto& src = a.essay.source_id;
    if (holdout_ids.count(src)) {
      throw InvariantViolation("leakage: adversarial essay " + a.essay.id + " derives from held-out essay " + src);
    }
    if (!allowed_sources.contains(src)) {
      throw InvariantViolation("leakage: adversarial essay " + a.essay.id + " derives from non-training essay " + src);
    }
  }
}

AugmentedCorpus build_augmented_train(const Corpus& train, const AttackSpec& spec,
                                      const AdversarialGenerator& generator, const std::set<std::string>& holdout_ids,
                                      bool parallel) {
  for (const auto& e : train.essays()) {
    if (holdout_ids.count(e.id)) throw InvariantViolation("training essay " + e.id + " is also held out");
  }
  auto gen = generate_from(train, spec, generator, parallel);
  check_no_leakage(gen.adversarial, train, holdout_ids);

  std::vector<Essay> merged = train.essays();
  for (const auto& a : gen.adversarial) merged.push_back(a.essay);
  Rng rng(mix_seed(spec.seed, 0xA06));
  rng.shuffle(std::span<Essay>(merged));

  AugmentedCorpus out;
  out.spec = spec;
  out.corpus = Corpus(train.scales());
  for (auto& e : merged) out.corpus.add(std::move(e));
  out.adversarial = std::move(gen.adversarial);
  out.exclusions = std::move(gen.exclusions);
  out.target = gen.target;
  return out;
}

nlohmann::json attack_spec_json(const AttackSpec& spec) {
  return {{"generation_ratio", spec.generation_ratio},
          {"attack_size_ratio", spec.attack_size_ratio},
          {"imbalance_aware", spec.imbalance_aware},
          {"seed", spec.seed}};
}

namespace {

nlohmann::json exclusions_json(const std::vector<Exclusion>& exclusions) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& x : exclusions) {
    out.push_back({{"draw_index", x.draw_index}, {"source_id", x.source_id}, {"reason", x.reason}});
  }
  return out;
}

}  // namespace

void write_attack_set(const AttackSet& set, const Corpus& originals, const std::filesystem::path& jsonl,
                      const std::filesystem::path& manifest) {
  std::vector<Json> lines;
  for (const auto& id : set.base) lines.push_back(essay_to_json(*originals.find(id)));
  for (const auto& a : set.adversarial) lines.push_back(adversarial_to_json(a));
  write_json_lines(lines, jsonl);
  write_json_file({{"kind", "attack_set"},
                   {"spec", attack_spec_json(set.spec)},
                   {"counts",
                    {{"base", set.base.size()},
                     {"target", set.target},
                     {"adversarial", set.adversarial.size()},
                     {"excluded", set.exclusions.size()},
                     {"total", set.size()}}},
                   {"exclusions", exclusions_json(set.exclusions)},
                   {"seed", set.spec.seed},
                   {"file", jsonl.filename().string()},
                   {"checksum", file_checksum_hex(jsonl)}},
                  manifest);
}

void write_augmented(const AugmentedCorpus& set, const std::filesystem::path& jsonl,
                     const std::filesystem::path& manifest) {
  std::map<std::string, const PerturbedEssay*> by_id;
  for (const auto& a : set.adversarial) by_id[a.essay.id] = &a;
  std::vector<Json> lines;
  for (const auto& e : set.corpus.essays()) {
    auto it = by_id.find(e.id);
    lines.push_back(it == by_id.end() ? essay_to_json(e) : adversarial_to_json(*it->second));
  }
  write_json_lines(lines, jsonl);
  write_json_file({{"kind", "augmented_train"},
                   {"spec", attack_spec_json(set.spec)},
                   {"counts",
                    {{"base", set.corpus.size() - set.adversarial.size()},
                     {"target", set.target},
                     {"adversarial", set.adversarial.size()},
                     {"excluded", set.exclusions.size()},
                     {"total", set.corpus.size()}}},
                   {"exclusions", exclusions_json(set.exclusions)},
                   {"seed", set.spec.seed},
                   {"file", jsonl.filename().string()},
                   {"checksum", file_checksum_hex(jsonl)}},
                  manifest);
}

}  // namespace aesadv

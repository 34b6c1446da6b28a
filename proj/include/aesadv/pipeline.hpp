#pragma once

// The three-condition robustness protocol:
//   train on originals -> evaluate on test (no_attack) and on the attack set
//   (with_attack); retrain on the augmented train set -> evaluate on the same
//   attack set (with_augmentation).

#include <memory>
#include <string>
#include <vector>

#include "aesadv/attack.hpp"
#include "aesadv/baseline.hpp"
#include "aesadv/config.hpp"
#include "aesadv/metrics.hpp"
#include "aesadv/scorer.hpp"

namespace aesadv {

Corpus load_dataset(const RunConfig& cfg);

// 60/20/20-style split of one prompt, or the fixed-test split when
// cfg.fixed_test_ids is set.
Split split_prompt(const Corpus& corpus, int prompt_id, const RunConfig& cfg);

// Baseline models are trained on `train` only. For the remote backend the
// returned models pointer is null.
struct BackendBundle {
  Backends backends;
  std::shared_ptr<const BaselineModels> baselines;
};
BackendBundle make_backends(const RunConfig& cfg, const Corpus& train);

struct PromptContext {
  int prompt_id = 0;
  Split split;
  BackendBundle backends;
  ScorerModel base_model;
  Evaluation no_attack;
};

PromptContext prepare_prompt(const Corpus& corpus, int prompt_id, const RunConfig& cfg);

AttackSpec cell_attack_spec(const RunConfig& cfg, double generation_ratio, double attack_size, SeedStream stream);
std::set<std::string> holdout_ids(const Split& split);

struct CellRun {
  QwkCell cell;
  AttackSet attack;
  AugmentedCorpus augmented;
  ScorerModel augmented_model;
};
CellRun run_cell(const PromptContext& ctx, const RunConfig& cfg, double generation_ratio, double attack_size);

// Every (generation ratio, attack size, prompt) cell. A failing cell is
// recorded in report.failures and the rest still run.
QwkReport run_report(const Corpus& corpus, const RunConfig& cfg);

}  // namespace aesadv

#include "aesadv/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "aesadv/error.hpp"
#include "aesadv/kernels.hpp"
#include "aesadv/log.hpp"

namespace aesadv {

Corpus load_dataset(const RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.dataset)) {
    throw DataError("dataset not found: " + cfg.dataset.string() + " (run `aesadv synth` to create the synthetic one)");
  }
  IngestOptions opts;
  opts.prompt_filter = cfg.prompts;
  opts.encoding = cfg.encoding;
  opts.scale_overrides = cfg.scale_overrides;
  auto result = ingest_tsv(cfg.dataset, opts);
  for (const auto& err : result.errors) {
    log::warn(cfg.dataset.string() + ":" + std::to_string(err.line) + ": " + err.message);
  }
  if (result.corpus.empty()) throw DataError("no essays ingested from " + cfg.dataset.string());
  return std::move(result.corpus);
}

BackendBundle make_backends(const RunConfig& cfg, const Corpus& train) {
  BackendBundle out;
  if (cfg.backend.kind == "remote") {
    out.backends = make_remote_backends(std::make_shared<RemoteClient>(cfg.backend.remote));
    return out;
  }
  auto models = std::make_shared<BaselineModels>(train_baselines(train, cfg.baseline));
  out.baselines = models;
  out.backends = make_baseline_backends(models);
  return out;
}

Split split_prompt(const Corpus& corpus, int prompt_id, const RunConfig& cfg) {
  const Corpus part = corpus.only_prompt(prompt_id);
  if (!cfg.fixed_test_ids) return split(part, cfg.split);
  std::ifstream in(*cfg.fixed_test_ids);
  if (!in) throw DataError("cannot read fixed test ids: " + cfg.fixed_test_ids->string());
  std::set<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  return split_with_fixed_test(part, ids, cfg.split);
}

PromptContext prepare_prompt(const Corpus& corpus, int prompt_id, const RunConfig& cfg) {
  PromptContext ctx;
  ctx.prompt_id = prompt_id;
  ctx.split = split_prompt(corpus, prompt_id, cfg);
  ctx.backends = make_backends(cfg, ctx.split.train);
  ctx.base_model = train(ctx.split.train, ctx.split.val, cfg.train, *ctx.backends.backends.embedder).model;
  ctx.no_attack = evaluate(ctx.base_model, ctx.split.test, *ctx.backends.backends.embedder);
  return ctx;
}

AttackSpec cell_attack_spec(const RunConfig& cfg, double generation_ratio, double attack_size, SeedStream stream) {
  AttackSpec spec;
  spec.generation_ratio = generation_ratio;
  spec.attack_size_ratio = attack_size;
  spec.imbalance_aware = cfg.grid.imbalance_aware;
  spec.seed = component_seed(cfg, stream);
  return spec;
}

std::set<std::string> holdout_ids(const Split& split) {
  std::set<std::string> ids;
  for (const auto& e : split.val.essays()) ids.insert(e.id);
  for (const auto& e : split.test.essays()) ids.insert(e.id);
  return ids;
}

CellRun run_cell(const PromptContext& ctx, const RunConfig& cfg, double generation_ratio, double attack_size) {
  const auto& backends = ctx.backends.backends;
  PipelineGenerator generator(cfg.generation, backends, ctx.split.train.scales());
  CellRun run;
  run.cell.generation_ratio = generation_ratio;
  run.cell.attack_size_ratio = attack_size;
  run.cell.prompt_id = ctx.prompt_id;
  run.cell.no_attack = ConditionResult{ctx.no_attack.kappa, ctx.no_attack.count};

  run.attack =
      build_attack_set(ctx.split.test, cell_attack_spec(cfg, generation_ratio, attack_size, SeedStream::kAttack), generator);
  const Corpus attack_records = run.attack.records(ctx.split.test);
  const auto attacked = evaluate(ctx.base_model, attack_records, *backends.embedder);
  run.cell.with_attack = ConditionResult{attacked.kappa, attacked.count};

  run.augmented = build_augmented_train(ctx.split.train,
                                        cell_attack_spec(cfg, generation_ratio, attack_size, SeedStream::kAugment),
                                        generator, holdout_ids(ctx.split));
  run.augmented_model = train(run.augmented.corpus, ctx.split.val, cfg.train, *backends.embedder).model;
  const auto restored = evaluate(run.augmented_model, attack_records, *backends.embedder);
  run.cell.with_augmentation = ConditionResult{restored.kappa, restored.count};
  return run;
}

namespace {

std::string cell_label(double g, double a, int prompt) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "generation_ratio=%.2f attack_size=%.2f prompt=%d", g, a, prompt);
  return buf;
}

}  // namespace

QwkReport run_report(const Corpus& corpus, const RunConfig& cfg) {
  cfg.validate();
  const auto prompts = corpus.prompts();
  if (prompts.empty()) throw DataError("corpus has no prompts");

  QwkReport report;
  std::vector<std::optional<PromptContext>> contexts(prompts.size());
  std::vector<std::string> prompt_errors(prompts.size());
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    try {
      contexts[p] = prepare_prompt(corpus, prompts[p], cfg);
    } catch (const BackendUnavailable&) {
      throw;
    } catch (const std::exception& ex) {
      prompt_errors[p] = ex.what();
    }
  }

  struct Job {
    double g, a;
    std::size_t prompt_index;
  };
  std::vector<Job> jobs;
  for (double g : cfg.grid.generation_ratios) {
    for (double a : cfg.grid.attack_sizes) {
      for (std::size_t p = 0; p < prompts.size(); ++p) jobs.push_back({g, a, p});
    }
  }
  std::vector<std::optional<QwkCell>> cells(jobs.size());
  std::vector<std::string> errors(jobs.size());

  if (cfg.workers > 0) kernels::set_threads(cfg.workers);
  kernels::parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& job = jobs[i];
    if (!contexts[job.prompt_index]) {
      errors[i] = prompt_errors[job.prompt_index];
      return;
    }
    try {
      cells[i] = run_cell(*contexts[job.prompt_index], cfg, job.g, job.a).cell;
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  if (cfg.workers > 0) kernels::set_threads(0);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    if (cells[i]) {
      report.cells.push_back(*cells[i]);
    } else {
      QwkCell partial;
      partial.generation_ratio = job.g;
      partial.attack_size_ratio = job.a;
      partial.prompt_id = prompts[job.prompt_index];
      if (contexts[job.prompt_index]) {
        const auto& na = contexts[job.prompt_index]->no_attack;
        partial.no_attack = ConditionResult{na.kappa, na.count};
      }
      report.cells.push_back(partial);
      report.failures.push_back(cell_label(job.g, job.a, partial.prompt_id) + ": " + errors[i]);
    }
  }
  return report;
}

}  // namespace aesadv

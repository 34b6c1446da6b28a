#include "aesadv/commands.hpp"

#include <cstdio>
#include <iostream>
#include <mutex>

#include "aesadv/attack.hpp"
#include "aesadv/baseline.hpp"
#include "aesadv/checksum.hpp"
#include "aesadv/error.hpp"
#include "aesadv/json_io.hpp"
#include "aesadv/log.hpp"
#include "aesadv/metrics.hpp"
#include "aesadv/pipeline.hpp"
#include "aesadv/remote.hpp"
#include "aesadv/synthetic.hpp"

namespace aesadv {

namespace fs = std::filesystem;

namespace {

std::string cell_tag(double g, double a) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "g%.2f_a%.2f", g, a);
  return buf;
}

std::string prompt_tag(int prompt) { return "p" + std::to_string(prompt); }

}  // namespace

fs::path ArtifactLayout::split(int prompt, const std::string& part) const {
  return root_ / ("split_" + prompt_tag(prompt) + "_" + part + ".jsonl");
}

fs::path ArtifactLayout::baselines(int prompt) const { return root_ / ("baselines_" + prompt_tag(prompt) + ".json"); }

fs::path ArtifactLayout::attack_set(int prompt, double g, double a) const {
  return root_ / ("attack_" + prompt_tag(prompt) + "_" + cell_tag(g, a) + ".jsonl");
}

fs::path ArtifactLayout::augmented(int prompt, double g, double a) const {
  return root_ / ("augmented_" + prompt_tag(prompt) + "_" + cell_tag(g, a) + ".jsonl");
}

fs::path ArtifactLayout::checkpoint(int prompt, std::optional<std::pair<double, double>> cell) const {
  if (!cell) return root_ / ("checkpoint_" + prompt_tag(prompt) + ".json");
  return root_ / ("checkpoint_" + prompt_tag(prompt) + "_augmented_" + cell_tag(cell->first, cell->second) + ".json");
}

fs::path ArtifactLayout::evaluation(int prompt, const std::string& name) const {
  return root_ / ("evaluation_" + prompt_tag(prompt) + "_" + name + ".json");
}

void require_artifact(const fs::path& path, const std::string& what, const std::string& command) {
  if (!fs::exists(path)) {
    throw DataError(what + " not found; run " + command + " (expected " + path.string() + ")");
  }
}

namespace {

std::mutex g_manifest_mu;

void record_entry(const ArtifactLayout& layout, nlohmann::json entry) {
  std::lock_guard<std::mutex> lock(g_manifest_mu);
  nlohmann::json manifest = {{"entries", nlohmann::json::array()}};
  if (fs::exists(layout.manifest())) manifest = read_json_file(layout.manifest());
  auto& entries = manifest["entries"];
  nlohmann::json kept = nlohmann::json::array();
  for (auto& e : entries) {
    if (e.value("output", "") != entry["output"]) kept.push_back(std::move(e));
  }
  kept.push_back(std::move(entry));
  std::sort(kept.begin(), kept.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
    return a["output"].get<std::string>() < b["output"].get<std::string>();
  });
  manifest["entries"] = std::move(kept);
  write_json_file(manifest, layout.manifest());
}

nlohmann::json output_entry(const std::string& command, const fs::path& output, const RunConfig& cfg,
                            const std::map<std::string, fs::path>& inputs, std::uint64_t seed) {
  nlohmann::json in = nlohmann::json::object();
  for (const auto& [name, path] : inputs) in[name] = {{"path", path.string()}, {"checksum", file_checksum_hex(path)}};
  return {{"command", command},
          {"output", output.string()},
          {"checksum", file_checksum_hex(output)},
          {"config_hash", config_hash(cfg)},
          {"inputs", in},
          {"seed", seed}};
}

}  // namespace

void record_output(const ArtifactLayout& layout, const std::string& command, const fs::path& output,
                   const RunConfig& cfg, const std::map<std::string, fs::path>& inputs, std::uint64_t seed) {
  record_entry(layout, output_entry(command, output, cfg, inputs, seed));
}

namespace {

struct Session {
  RunConfig cfg;
  ArtifactLayout layout;
  std::map<int, ScoreScale> scales;
  int prompt = 0;
};

Session open_session(const CommandOptions& opts) {
  Session s{load_config(opts.config), ArtifactLayout(fs::path()), {}, 0};
  s.layout = ArtifactLayout(s.cfg.output_dir);
  require_artifact(s.layout.scales(), "ingested corpus", "ingest");
  s.scales = read_scales(s.layout.scales());
  if (opts.prompt) {
    if (!s.scales.count(*opts.prompt)) {
      throw ConfigError("prompt " + std::to_string(*opts.prompt) + " is not in the ingested corpus");
    }
    s.prompt = *opts.prompt;
  } else if (s.scales.size() == 1) {
    s.prompt = s.scales.begin()->first;
  } else {
    throw ConfigError("the ingested corpus has several prompts; pass --prompt");
  }
  return s;
}

Corpus load_part(const Session& s, const std::string& part) {
  const auto path = s.layout.split(s.prompt, part);
  require_artifact(path, part + " split", "ingest");
  return read_jsonl(path, s.scales);
}

BackendBundle load_backends(const Session& s) {
  BackendBundle out;
  if (s.cfg.backend.kind == "remote") {
    out.backends = make_remote_backends(std::make_shared<RemoteClient>(s.cfg.backend.remote));
    return out;
  }
  const auto path = s.layout.baselines(s.prompt);
  require_artifact(path, "baseline models", "train-baselines");
  auto models = std::make_shared<BaselineModels>(BaselineModels::from_json(read_json_file(path)));
  out.baselines = models;
  out.backends = make_baseline_backends(models);
  return out;
}

std::pair<double, double> chosen_cell(const CommandOptions& opts, const RunConfig& cfg) {
  return {opts.generation_ratio.value_or(cfg.grid.generation_ratios.front()),
          opts.attack_size.value_or(cfg.grid.attack_sizes.front())};
}

std::map<std::string, fs::path> backend_inputs(const Session& s) {
  if (s.cfg.backend.kind == "remote") return {};
  return {{"baselines", s.layout.baselines(s.prompt)}};
}

}  // namespace

void cmd_synth(const CommandOptions& opts) {
  const RunConfig cfg = load_config(opts.config);
  const fs::path out = opts.out.value_or(cfg.dataset);
  write_file(out, synthetic_tsv(cfg.synthetic));
  std::cout << "wrote " << cfg.synthetic.essays << " synthetic essays to " << out.string() << '\n';
}

void cmd_ingest(const CommandOptions& opts) {
  const RunConfig cfg = load_config(opts.config);
  const ArtifactLayout layout(cfg.output_dir);
  const Corpus corpus = load_dataset(cfg);
  const std::map<std::string, fs::path> inputs = {{"dataset", cfg.dataset}};
  write_jsonl(corpus, layout.corpus());
  write_scales(corpus.scales(), layout.scales());
  record_output(layout, "ingest", layout.corpus(), cfg, inputs, cfg.seed);
  record_output(layout, "ingest", layout.scales(), cfg, inputs, cfg.seed);
  for (int p : corpus.prompts()) {
    const Split parts = split_prompt(corpus, p, cfg);
    for (const auto& [name, part] : {std::pair{"train", &parts.train}, {"val", &parts.val}, {"test", &parts.test}}) {
      write_jsonl(*part, layout.split(p, name));
      record_output(layout, "ingest", layout.split(p, name), cfg, inputs, cfg.split.seed);
    }
    std::cout << "prompt " << p << ": " << parts.train.size() << " train, " << parts.val.size() << " val, "
              << parts.test.size() << " test\n";
  }
}

void cmd_train_baselines(const CommandOptions& opts) {
  const Session s = open_session(opts);
  const Corpus train = load_part(s, "train");
  const BaselineModels models = train_baselines(train, s.cfg.baseline);
  write_json_file(models.to_json(), s.layout.baselines(s.prompt));
  record_output(s.layout, "train-baselines", s.layout.baselines(s.prompt), s.cfg,
                {{"train", s.layout.split(s.prompt, "train")}}, s.cfg.baseline.seed);
  if (!models.fallback_classes.empty()) {
    std::string list;
    for (int y : models.fallback_classes) list += (list.empty() ? "" : ", ") + std::to_string(y);
    log::warn("classes without training essays use the global model: " + list);
  }
  std::cout << "baseline models: vocabulary " << models.vocab.size() << ", " << models.class_models.size()
            << " class models\n";
}

void cmd_generate(const CommandOptions& opts) {
  const Session s = open_session(opts);
  const auto [g, a] = chosen_cell(opts, s.cfg);
  const Corpus test = load_part(s, "test");
  const auto backends = load_backends(s);
  PipelineGenerator generator(s.cfg.generation, backends.backends, s.scales);
  const AttackSpec spec = cell_attack_spec(s.cfg, g, a, SeedStream::kAttack);
  const AttackSet set = build_attack_set(test, spec, generator);
  const auto out = s.layout.attack_set(s.prompt, g, a);
  auto sidecar = out;
  sidecar.replace_extension(".manifest.json");
  write_attack_set(set, test, out, sidecar);
  auto inputs = backend_inputs(s);
  inputs["test"] = s.layout.split(s.prompt, "test");
  record_output(s.layout, "generate", out, s.cfg, inputs, spec.seed);
  std::cout << "attack set: " << set.base.size() << " originals + " << set.adversarial.size() << " adversarial (target "
            << set.target << ", " << set.exclusions.size() << " excluded)\n";
}

void cmd_augment(const CommandOptions& opts) {
  const Session s = open_session(opts);
  const auto [g, a] = chosen_cell(opts, s.cfg);
  Split parts{load_part(s, "train"), load_part(s, "val"), load_part(s, "test")};
  const auto backends = load_backends(s);
  PipelineGenerator generator(s.cfg.generation, backends.backends, s.scales);
  const AttackSpec spec = cell_attack_spec(s.cfg, g, a, SeedStream::kAugment);
  const AugmentedCorpus aug = build_augmented_train(parts.train, spec, generator, holdout_ids(parts));
  const auto out = s.layout.augmented(s.prompt, g, a);
  auto sidecar = out;
  sidecar.replace_extension(".manifest.json");
  write_augmented(aug, out, sidecar);
  auto inputs = backend_inputs(s);
  for (const char* part : {"train", "val", "test"}) inputs[part] = s.layout.split(s.prompt, part);
  record_output(s.layout, "augment", out, s.cfg, inputs, spec.seed);
  std::cout << "augmented train: " << aug.corpus.size() << " essays (" << aug.adversarial.size() << " adversarial, "
            << aug.exclusions.size() << " excluded)\n";
}

void cmd_train(const CommandOptions& opts) {
  const Session s = open_session(opts);
  const auto cell = chosen_cell(opts, s.cfg);
  Corpus train_set;
  fs::path train_path;
  if (opts.augmented) {
    train_path = s.layout.augmented(s.prompt, cell.first, cell.second);
    require_artifact(train_path, "augmented train set", "augment");
    train_set = read_jsonl(train_path, s.scales);
  } else {
    train_path = s.layout.split(s.prompt, "train");
    train_set = load_part(s, "train");
  }
  const Corpus val = load_part(s, "val");
  const auto backends = load_backends(s);
  const TrainResult result = train(train_set, val, s.cfg.train, *backends.backends.embedder);

  auto j = checkpoint_to_json(result.model);
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : result.history) history.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"val_qwk", r.val_qwk}});
  j["training"] = {{"best_epoch", result.best_epoch}, {"history", history}};
  const auto out = s.layout.checkpoint(s.prompt, opts.augmented ? std::optional(cell) : std::nullopt);
  write_json_file(j, out);
  auto inputs = backend_inputs(s);
  inputs["train"] = train_path;
  inputs["val"] = s.layout.split(s.prompt, "val");
  record_output(s.layout, "train", out, s.cfg, inputs, s.cfg.train.seed);
  const auto& best = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
  std::printf("best epoch %d: loss %.6f, validation qwk %.4f\n", best.epoch, best.loss, best.val_qwk);
}

nlohmann::json cmd_evaluate(const CommandOptions& opts) {
  const Session s = open_session(opts);
  const auto cell = chosen_cell(opts, s.cfg);
  const auto ckpt = s.layout.checkpoint(s.prompt, opts.augmented ? std::optional(cell) : std::nullopt);
  require_artifact(ckpt, "checkpoint", opts.augmented ? "train --augmented" : "train");
  const ScorerModel model = checkpoint_from_json(read_json_file(ckpt));

  Corpus set;
  fs::path set_path;
  if (opts.eval_set == "test") {
    set_path = s.layout.split(s.prompt, "test");
    set = load_part(s, "test");
  } else if (opts.eval_set == "attack") {
    set_path = s.layout.attack_set(s.prompt, cell.first, cell.second);
    require_artifact(set_path, "attack set", "generate");
    set = read_jsonl(set_path, s.scales);
  } else {
    throw ConfigError("evaluation set must be 'test' or 'attack', got '" + opts.eval_set + "'");
  }
  const auto backends = load_backends(s);
  const Evaluation e = evaluate(model, set, *backends.backends.embedder);

  nlohmann::json labels = nlohmann::json::array();
  for (int y = e.confusion.scale.min_score; y <= e.confusion.scale.max_score; ++y) labels.push_back(y);
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t k = e.confusion.classes();
  for (std::size_t i = 0; i < k; ++i) {
    rows.push_back(std::vector<std::size_t>(e.confusion.counts.begin() + static_cast<std::ptrdiff_t>(i * k),
                                            e.confusion.counts.begin() + static_cast<std::ptrdiff_t>((i + 1) * k)));
  }
  nlohmann::json out = {{"prompt_id", s.prompt},
                        {"set", opts.eval_set},
                        {"model", opts.augmented ? "augmented" : "original"},
                        {"kappa", e.kappa},
                        {"count", e.count},
                        {"confusion", {{"labels", labels}, {"rows", rows}}}};
  std::string name = opts.eval_set;
  if (opts.eval_set == "attack") name += "_" + cell_tag(cell.first, cell.second);
  if (opts.augmented) name += "_augmented";
  const auto path = s.layout.evaluation(s.prompt, name);
  write_json_file(out, path);
  auto inputs = backend_inputs(s);
  inputs["checkpoint"] = ckpt;
  inputs["set"] = set_path;
  record_output(s.layout, "evaluate", path, s.cfg, inputs, s.cfg.seed);
  std::printf("qwk %.4f over %zu essays\n", e.kappa, e.count);
  return out;
}

void cmd_report(const CommandOptions& opts) {
  const RunConfig cfg = load_config(opts.config);
  const ArtifactLayout layout(cfg.output_dir);
  const Corpus corpus = load_dataset(cfg);
  const QwkReport report = run_report(corpus, cfg);

  write_file(layout.report("txt"), render_text(report));
  write_file(layout.report("csv"), render_csv(report));
  write_json_file(report_to_json(report), layout.report("json"));
  const std::map<std::string, fs::path> inputs = {{"dataset", cfg.dataset}};
  for (const char* ext : {"txt", "csv"}) record_output(layout, "report", layout.report(ext), cfg, inputs, cfg.seed);
  auto entry = output_entry("report", layout.report("json"), cfg, inputs, cfg.seed);
  entry["failures"] = report.failures;
  record_entry(layout, std::move(entry));

  std::cout << render_text(report);
  if (!report.failures.empty()) {
    throw InvariantViolation(std::to_string(report.failures.size()) + " grid cell(s) failed; see " +
                             layout.manifest().string());
  }
}

}  // namespace aesadv

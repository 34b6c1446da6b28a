#pragma once

// Subcommands of the aesadv tool. Each reads and writes only the artifact
// files named by ArtifactLayout and records every output in the run
// manifest.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "aesadv/config.hpp"
#include "json.hpp"

namespace aesadv {

class ArtifactLayout {
 public:
  explicit ArtifactLayout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path corpus() const { return root_ / "corpus.jsonl"; }
  std::filesystem::path scales() const { return root_ / "scales.json"; }
  std::filesystem::path split(int prompt, const std::string& part) const;
  std::filesystem::path baselines(int prompt) const;
  std::filesystem::path attack_set(int prompt, double generation_ratio, double attack_size) const;
  std::filesystem::path augmented(int prompt, double generation_ratio, double attack_size) const;
  // No grid cell means the model trained on the original train split.
  std::filesystem::path checkpoint(int prompt, std::optional<std::pair<double, double>> cell = std::nullopt) const;
  std::filesystem::path evaluation(int prompt, const std::string& name) const;
  std::filesystem::path report(const std::string& extension) const { return root_ / ("report." + extension); }
  std::filesystem::path manifest() const { return root_ / "manifest.json"; }

 private:
  std::filesystem::path root_;
};

// Throws DataError("<what> not found; run <command>") when `path` is absent.
void require_artifact(const std::filesystem::path& path, const std::string& what, const std::string& command);

// Adds or replaces the manifest entry for `output`. Safe to call from
// several threads.
void record_output(const ArtifactLayout& layout, const std::string& command, const std::filesystem::path& output,
                   const RunConfig& cfg, const std::map<std::string, std::filesystem::path>& inputs,
                   std::uint64_t seed);

struct CommandOptions {
  ConfigSources config;
  std::optional<int> prompt;
  std::optional<double> generation_ratio;  // defaults to the first grid value
  std::optional<double> attack_size;       // defaults to the first grid value
  bool augmented = false;                  // train/evaluate the augmented-train model
  std::string eval_set = "test";           // test | attack
  std::optional<std::filesystem::path> out;
};

void cmd_synth(const CommandOptions& opts);
void cmd_ingest(const CommandOptions& opts);
void cmd_train_baselines(const CommandOptions& opts);
void cmd_generate(const CommandOptions& opts);
void cmd_augment(const CommandOptions& opts);
void cmd_train(const CommandOptions& opts);
nlohmann::json cmd_evaluate(const CommandOptions& opts);
void cmd_report(const CommandOptions& opts);

}  // namespace aesadv

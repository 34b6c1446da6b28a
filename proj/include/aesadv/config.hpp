#pragma once

// Run configuration. The effective document is built as
//   defaults <- config file <- AESADV_BACKEND_URL <- --set overrides
// and then decoded into RunConfig, so every key has exactly one meaning
// regardless of where it came from.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aesadv/baseline.hpp"
#include "aesadv/corpus.hpp"
#include "aesadv/perturbation.hpp"
#include "aesadv/remote.hpp"
#include "aesadv/scorer.hpp"
#include "aesadv/synthetic.hpp"
#include "json.hpp"

namespace aesadv {

inline constexpr const char* kBackendUrlEnv = "AESADV_BACKEND_URL";

struct GridSpec {
  std::vector<double> generation_ratios = {0.30, 0.40};
  std::vector<double> attack_sizes = {0.50, 0.75};
  bool imbalance_aware = true;
};

struct BackendSelection {
  std::string kind = "baseline";  // baseline | remote
  RemoteBackendConfig remote;
};

// Component seeds (split, baselines, generation, attack, scorer) are all
// derived from `seed`; the per-component seed fields are ignored on input.
struct RunConfig {
  std::filesystem::path dataset = "data/synthetic.tsv";
  TextEncoding encoding = TextEncoding::kCp1252;
  std::optional<std::set<int>> prompts;
  std::map<int, ScoreScale> scale_overrides;
  SyntheticSpec synthetic;
  SplitSpec split;
  // File of essay ids (one per line) that form the test set of every prompt;
  // train and val are then drawn from the rest.
  std::optional<std::filesystem::path> fixed_test_ids;
  BaselineParams baseline;
  GenerationSpec generation;
  GridSpec grid;
  BackendSelection backend;
  TrainConfig train;
  std::filesystem::path output_dir = "out";
  int workers = 0;  // grid cells in flight; 0 = one per available thread
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json default_config_json();

// Applies `key.path=value` (value parsed as JSON, else taken as a string).
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::vector<std::string> overrides;
  bool use_env = true;
};

// Relative paths are resolved against the config file's directory, or the
// working directory when there is no file.
RunConfig load_config(const ConfigSources& sources);
nlohmann::json effective_config_json(const ConfigSources& sources);
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json config_to_json(const RunConfig& cfg);

// Checksum of the canonical serialisation of the decoded config.
std::string config_hash(const RunConfig& cfg);

enum class SeedStream : std::uint64_t { kSplit = 1, kBaseline, kTrain, kGeneration, kAttack, kAugment };
std::uint64_t component_seed(const RunConfig& cfg, SeedStream stream);

}  // namespace aesadv

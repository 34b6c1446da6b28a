#include "aesadv/config.hpp"

#include <cmath>
#include <cstdlib>

#include "aesadv/checksum.hpp"
#include "aesadv/error.hpp"
#include "aesadv/json_io.hpp"
#include "aesadv/rng.hpp"

namespace aesadv {

namespace {

std::string encoding_name(TextEncoding e) { return e == TextEncoding::kUtf8 ? "utf-8" : "cp1252"; }

TextEncoding parse_encoding(const std::string& s) {
  if (s == "cp1252" || s == "windows-1252") return TextEncoding::kCp1252;
  if (s == "utf-8" || s == "utf8") return TextEncoding::kUtf8;
  throw ConfigError("unknown encoding '" + s + "' (expected cp1252 or utf-8)");
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : (base / p).lexically_normal();
}

}  // namespace

void RunConfig::validate() const {
  split.validate();
  baseline.validate();
  generation.validate();
  train.validate();
  synthetic.validate();
  if (grid.generation_ratios.empty() || grid.attack_sizes.empty()) throw ConfigError("attack grid is empty");
  for (double g : grid.generation_ratios) {
    if (!(g > 0.0) || g >= 1.0) throw ConfigError("grid generation ratios must be in (0, 1)");
  }
  for (double a : grid.attack_sizes) {
    if (!(a > 0.0)) throw ConfigError("grid attack sizes must be > 0");
  }
  if (backend.kind != "baseline" && backend.kind != "remote") {
    throw ConfigError("backend.kind must be 'baseline' or 'remote', got '" + backend.kind + "'");
  }
  if (backend.kind == "remote") backend.remote.validate();
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json scales = nlohmann::json::array();
  for (const auto& [p, s] : c.scale_overrides) {
    scales.push_back({{"prompt_id", p}, {"min_score", s.min_score}, {"max_score", s.max_score}});
  }
  nlohmann::json j = {
      {"dataset", c.dataset.string()},
      {"encoding", encoding_name(c.encoding)},
      {"prompts", c.prompts ? nlohmann::json(*c.prompts) : nlohmann::json(nullptr)},
      {"scale_overrides", scales},
      {"synthetic",
       {{"essays", c.synthetic.essays},
        {"prompt_id", c.synthetic.prompt_id},
        {"min_score", c.synthetic.min_score},
        {"class_shares", c.synthetic.class_shares},
        {"quality_noise", c.synthetic.quality_noise},
        {"register_share", c.synthetic.register_share},
        {"phrase_words", c.synthetic.phrase_words},
        {"min_sentences", c.synthetic.min_sentences},
        {"sentence_spread", c.synthetic.sentence_spread},
        {"length_effect", c.synthetic.length_effect},
        {"seed", c.synthetic.seed}}},
      {"split",
       {{"train", c.split.train_fraction},
        {"val", c.split.val_fraction},
        {"test", c.split.test_fraction},
        {"stratified", c.split.stratified},
        {"fixed_test_ids", c.fixed_test_ids ? nlohmann::json(c.fixed_test_ids->string()) : nlohmann::json(nullptr)}}},
      {"baseline",
       {{"dim", c.baseline.dim},
        {"ngram_order", c.baseline.ngram_order},
        {"alpha", c.baseline.alpha},
        {"cooccurrence_window", c.baseline.cooccurrence_window}}},
      {"generation",
       {{"sentence_ratio", c.generation.sentence_ratio},
        {"window_half_width",
         c.generation.window_half_width ? nlohmann::json(*c.generation.window_half_width) : nlohmann::json(nullptr)},
        {"num_candidates", c.generation.num_candidates},
        {"length_threshold", c.generation.length_threshold},
        {"filter_threshold", c.generation.filter_threshold}}},
      {"grid",
       {{"generation_ratios", c.grid.generation_ratios},
        {"attack_sizes", c.grid.attack_sizes},
        {"imbalance_aware", c.grid.imbalance_aware}}},
      {"backend",
       {{"kind", c.backend.kind},
        {"remote",
         {{"base_url", c.backend.remote.base_url},
          {"timeout_ms", c.backend.remote.timeout_ms},
          {"max_retries", c.backend.remote.max_retries},
          {"max_in_flight", c.backend.remote.max_in_flight},
          {"backoff_ms", c.backend.remote.backoff_ms}}}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"decay", c.train.decay},
        {"epsilon", c.train.epsilon},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"hidden", c.train.hidden}}},
      {"output_dir", c.output_dir.string()},
      {"workers", c.workers},
      {"seed", c.seed}};
  return j;
}

nlohmann::json default_config_json() { return config_to_json(RunConfig{}); }

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  std::string pointer;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    pointer += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  const nlohmann::json::json_pointer ptr(pointer);
  if (!doc.contains(ptr) && !default_config_json().contains(ptr)) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  doc[ptr] = value;
}

RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  // Unknown top-level keys are almost always typos; reject them.
  const auto defaults = default_config_json();
  for (const auto& [k, v] : doc.items()) {
    if (!defaults.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  nlohmann::json j = defaults;
  j.merge_patch(doc);
  try {
    RunConfig c;
    c.dataset = resolve(j.at("dataset").get<std::string>(), base_dir);
    c.encoding = parse_encoding(j.at("encoding").get<std::string>());
    if (j.contains("prompts") && !j.at("prompts").is_null()) c.prompts = j.at("prompts").get<std::set<int>>();
    for (const auto& s : j.at("scale_overrides")) {
      ScoreScale sc{s.at("prompt_id").get<int>(), s.at("min_score").get<int>(), s.at("max_score").get<int>()};
      sc.validate();
      c.scale_overrides[sc.prompt_id] = sc;
    }
    const auto& syn = j.at("synthetic");
    c.synthetic.essays = syn.at("essays").get<std::size_t>();
    c.synthetic.prompt_id = syn.at("prompt_id").get<int>();
    c.synthetic.min_score = syn.at("min_score").get<int>();
    c.synthetic.class_shares = syn.at("class_shares").get<std::vector<double>>();
    c.synthetic.quality_noise = syn.at("quality_noise").get<double>();
    c.synthetic.register_share = syn.at("register_share").get<double>();
    c.synthetic.phrase_words = syn.at("phrase_words").get<std::size_t>();
    c.synthetic.min_sentences = syn.at("min_sentences").get<std::size_t>();
    c.synthetic.sentence_spread = syn.at("sentence_spread").get<std::size_t>();
    c.synthetic.length_effect = syn.at("length_effect").get<double>();
    c.synthetic.seed = syn.at("seed").get<std::uint64_t>();
    const auto& sp = j.at("split");
    c.split.train_fraction = sp.at("train").get<double>();
    c.split.val_fraction = sp.at("val").get<double>();
    c.split.test_fraction = sp.at("test").get<double>();
    c.split.stratified = sp.at("stratified").get<bool>();
    if (sp.contains("fixed_test_ids") && !sp.at("fixed_test_ids").is_null()) {
      c.fixed_test_ids = resolve(sp.at("fixed_test_ids").get<std::string>(), base_dir);
    }
    const auto& b = j.at("baseline");
    c.baseline.dim = b.at("dim").get<int>();
    c.baseline.ngram_order = b.at("ngram_order").get<int>();
    c.baseline.alpha = b.at("alpha").get<double>();
    c.baseline.cooccurrence_window = b.at("cooccurrence_window").get<int>();
    const auto& g = j.at("generation");
    c.generation.sentence_ratio = g.at("sentence_ratio").get<double>();
    if (g.contains("window_half_width") && !g.at("window_half_width").is_null()) {
      c.generation.window_half_width = g.at("window_half_width").get<std::size_t>();
    }
    c.generation.num_candidates = g.at("num_candidates").get<std::size_t>();
    c.generation.length_threshold = g.at("length_threshold").get<std::size_t>();
    c.generation.filter_threshold = g.at("filter_threshold").get<double>();
    const auto& gr = j.at("grid");
    c.grid.generation_ratios = gr.at("generation_ratios").get<std::vector<double>>();
    c.grid.attack_sizes = gr.at("attack_sizes").get<std::vector<double>>();
    c.grid.imbalance_aware = gr.at("imbalance_aware").get<bool>();
    const auto& be = j.at("backend");
    c.backend.kind = be.at("kind").get<std::string>();
    const auto& r = be.at("remote");
    c.backend.remote.base_url = r.at("base_url").get<std::string>();
    c.backend.remote.timeout_ms = r.at("timeout_ms").get<int>();
    c.backend.remote.max_retries = r.at("max_retries").get<int>();
    c.backend.remote.max_in_flight = r.at("max_in_flight").get<int>();
    c.backend.remote.backoff_ms = r.at("backoff_ms").get<int>();
    const auto& t = j.at("train");
    c.train.learning_rate = t.at("learning_rate").get<double>();
    c.train.decay = t.at("decay").get<double>();
    c.train.epsilon = t.at("epsilon").get<double>();
    c.train.epochs = t.at("epochs").get<int>();
    c.train.batch_size = t.at("batch_size").get<std::size_t>();
    c.train.hidden = t.at("hidden").get<std::size_t>();
    c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    c.workers = j.at("workers").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();

    c.split.seed = component_seed(c, SeedStream::kSplit);
    c.baseline.seed = component_seed(c, SeedStream::kBaseline);
    c.train.seed = component_seed(c, SeedStream::kTrain);
    c.generation.seed = component_seed(c, SeedStream::kGeneration);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("invalid config value: ") + ex.what());
  }
}

nlohmann::json effective_config_json(const ConfigSources& sources) {
  nlohmann::json doc = nlohmann::json::object();
  if (sources.file) {
    if (!std::filesystem::exists(*sources.file)) throw ConfigError("config file not found: " + sources.file->string());
    try {
      doc = nlohmann::json::parse(read_file(*sources.file));
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("config file " + sources.file->string() + " is not valid JSON: " + ex.what());
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  nlohmann::json merged = default_config_json();
  for (const auto& [k, v] : doc.items()) {
    if (!merged.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  merged.merge_patch(doc);
  if (sources.use_env) {
    if (const char* url = std::getenv(kBackendUrlEnv); url != nullptr && *url != '\0') {
      merged["backend"]["remote"]["base_url"] = url;
    }
  }
  for (const auto& o : sources.overrides) apply_override(merged, o);
  return merged;
}

RunConfig load_config(const ConfigSources& sources) {
  const auto doc = effective_config_json(sources);
  const std::filesystem::path base = sources.file ? sources.file->parent_path() : std::filesystem::path();
  return config_from_json(doc, base);
}

std::string config_hash(const RunConfig& cfg) { return checksum_hex(config_to_json(cfg).dump()); }

std::uint64_t component_seed(const RunConfig& cfg, SeedStream stream) {
  return mix_seed(cfg.seed, static_cast<std::uint64_t>(stream));
}

}  // namespace aesadv
